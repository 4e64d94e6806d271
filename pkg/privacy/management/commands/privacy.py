from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.encoding import decode_tagged
from core.exceptions import VpkiError
from privacy.collusion import SnapshotSet
from privacy.report import analyze, write_report
from privacy.transcript import Transcript


class Command(BaseCommand):
    help = 'Analisa um transcript (ligação por tempos de vida) e coalizões de autoridades sobre os snapshots.'

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)
        run = actions.add_parser('analyze')
        run.add_argument('--transcript', required=True)
        run.add_argument('--snapshots', help='Diretório com os snapshots (*.snap) das autoridades.')
        run.add_argument('--collude', action='append', default=[],
                         help='Coalizão separada por vírgulas, ex.: LTCA_A,PCA_A. Pode repetir.')
        run.add_argument('--table', action='store_true', help='Confere as seis linhas da tabela de conhecimento.')
        run.add_argument('--out', required=True)

    def handle(self, *args, **options):
        coalitions = [tuple(t.strip() for t in c.split(',') if t.strip()) for c in options['collude']]
        try:
            transcript = decode_tagged(Path(options['transcript']).read_bytes(), Transcript)
            snapshots = SnapshotSet.load(options['snapshots']) if options['snapshots'] else None
            if snapshots is None and (coalitions or options['table']):
                raise CommandError("--collude e --table exigem --snapshots")
            report = analyze(transcript, snapshots, coalitions, table=options['table'])
            write_report(report, options['out'])
        except (VpkiError, OSError) as exc:
            raise CommandError(str(exc)) from exc
        linkage = report['linkage']
        if linkage is not None:
            self.stdout.write(f"precisão {linkage['precision']} revocação {linkage['recall']} "
                              f"conjunto de anonimato médio {linkage['mean_anonymity_set']}")
        if options['table'] and not all(row['conforms'] for row in report['table']):
            raise CommandError("tabela de conhecimento não confere")
        self.stdout.write(self.style.SUCCESS(f"Relatório gravado em {options['out']}."))
