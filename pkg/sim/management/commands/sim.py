import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import VpkiError
from core.hosting import use_state_file
from core.clock import SystemClock
from sim import runner
from sim.bench import run_bench
from sim.deployment import Deployment
from sim.metrics import ramp_shape
from sim.scenario import load_scenario, scenario_schema, two_domain_topology


class Command(BaseCommand):
    help = (
        'Harness de emulação: roda um cenário (run), a rampa de atacantes (ramp), '
        'as medianas de emissão (bench) ou mostra o schema (schema).'
    )

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)
        run = actions.add_parser('run', help='Roda um cenário e grava métricas, transcript e snapshots.')
        run.add_argument('scenario')
        run.add_argument('--out', required=True)

        ramp = actions.add_parser('ramp', help='Repete o cenário para cada número de atacantes.')
        ramp.add_argument('scenario')
        ramp.add_argument('--levels', default='0,500,1000,2000', help='Números de atacantes separados por vírgula.')
        ramp.add_argument('--out', required=True)

        bench = actions.add_parser('bench', help='Medianas de emissão ao lado das medianas de referência.')
        bench.add_argument('--rounds', type=int, default=5)
        bench.add_argument('--out', required=True)

        schema = actions.add_parser('schema', help='Imprime o JSON Schema do arquivo de cenário.')
        schema.add_argument('--out')

    def handle(self, *args, **options):
        try:
            if options['action'] == 'schema':
                return self._schema(options)
            if options['action'] == 'bench':
                return self._bench(Path(options['out']), options['rounds'])
            scenario = load_scenario(options['scenario'])
            out = Path(options['out'])
            if options['action'] == 'run':
                self._run(scenario, out)
            else:
                self._ramp(scenario, out, options['levels'])
        except (VpkiError, ValueError, OSError) as exc:
            raise CommandError(str(exc)) from exc

    def _schema(self, options):
        text = json.dumps(scenario_schema(), indent=2, ensure_ascii=False)
        if options['out']:
            Path(options['out']).write_text(text + "\n", encoding="utf-8")
            self.stdout.write(self.style.SUCCESS(f"Schema gravado em {options['out']}."))
        else:
            self.stdout.write(text)

    def _run(self, scenario, out):
        use_state_file(out / 'state.sqlite3')
        report = runner.run(scenario, out)
        for op, entry in report.summary.items():
            if entry['count']:
                self.stdout.write(f"{op}: {entry['count']} ok, p50 {entry['p50']:.1f} ms, p99 {entry['p99']:.1f} ms")
        failed = [m.name for m in report.monitors if not m.ok]
        if failed:
            raise CommandError(f"monitores dispararam: {', '.join(failed)} (detalhes em {out / 'summary.json'})")
        self.stdout.write(self.style.SUCCESS(f"Rodada concluída, resultados em {out}."))

    def _ramp(self, scenario, out, levels):
        levels = [int(level) for level in levels.split(',') if level.strip()]
        out.mkdir(parents=True, exist_ok=True)
        rows = runner.ramp(scenario, levels, prepare=lambda level: use_state_file(out / f'state-{level}.sqlite3'))
        shape = ramp_shape(rows) if rows else None
        (out / 'ramp.json').write_text(json.dumps({'levels': rows, 'shape': shape}, indent=2), encoding="utf-8")
        lines = ["# atacantes pedidos_legitimos_por_s"] + [f"{r['attackers']} {r['served_per_second']:.3f}" for r in rows]
        (out / 'ramp.dat').write_text("\n".join(lines) + "\n", encoding="utf-8")
        for row in rows:
            self.stdout.write(f"{row['attackers']} atacantes: {row['served_per_second']:.2f} pedidos/s, "
                              f"{row['attacks_accepted']} ataques aceitos")
        if shape is not None:
            self.stdout.write(f"forma da rampa: queda de {shape['drop']:.0%}, "
                              f"{'monótona' if shape['monotone'] else 'não monótona'}")
        if not all(row['ok'] for row in rows):
            raise CommandError("algum monitor disparou durante a rampa")
        self.stdout.write(self.style.SUCCESS(f"Rampa gravada em {out / 'ramp.json'}."))

    def _bench(self, out, rounds):
        use_state_file(out / 'state.sqlite3')
        checks = run_bench(Deployment(two_domain_topology(), SystemClock()), rounds)
        summary = checks.pop('summary')
        (out / 'bench.json').write_text(json.dumps({'checks': checks, 'operations': summary}, indent=2),
                                        encoding="utf-8")
        for op, check in checks.items():
            self.stdout.write(f"{op}: mediana {check['median_ms']:.1f} ms "
                              f"(referência {check['reference_ms']:.0f} ms, limite {check['limit_ms']:.0f} ms)")
        slow = [op for op, check in checks.items() if not check['ok']]
        if slow:
            raise CommandError(f"medianas acima do limite: {', '.join(slow)}")
        self.stdout.write(self.style.SUCCESS(f"Medianas gravadas em {out / 'bench.json'}."))
