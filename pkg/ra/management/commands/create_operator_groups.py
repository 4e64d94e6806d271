from pathlib import Path

from django.contrib.auth.models import Group, Permission, User
from django.core.management.base import BaseCommand, CommandError

from core import crypto
from core.hosting import use_state_file
from ra.models import OperatorKey

OPERATOR_GROUP = 'Operadores RA'


class Command(BaseCommand):
    help = 'Cria o grupo "Operadores RA" com as permissões de resolução e, opcionalmente, um operador.'

    def add_arguments(self, parser):
        parser.add_argument('--state', help='Arquivo SQLite da RA (padrão: banco configurado).')
        parser.add_argument('--operator', help='Usuário a criar (se preciso) e colocar no grupo.')
        parser.add_argument('--key', help='PEM da chave com que o operador assina pedidos pelo fio.')

    def handle(self, *args, **options):
        if options['state']:
            use_state_file(options['state'])
        self.stdout.write("Iniciando a configuração de grupos e permissões...")

        grupo, created = Group.objects.get_or_create(name=OPERATOR_GROUP)
        if created:
            self.stdout.write(self.style.SUCCESS(f'Grupo "{OPERATOR_GROUP}" criado.'))
        permissoes = Permission.objects.filter(
            content_type__app_label='ra', codename__in=['request_resolution', 'view_auditlogentry']
        )
        grupo.permissions.set(permissoes)
        self.stdout.write(self.style.SUCCESS(f'Permissões para "{OPERATOR_GROUP}" atualizadas.'))

        username = options['operator']
        if username:
            user, created = User.objects.get_or_create(username=username)
            if created:
                user.set_unusable_password()
                user.save()
                self.stdout.write(self.style.SUCCESS(f'Operador "{username}" criado.'))
            user.groups.add(grupo)
            if options['key']:
                try:
                    keypair = crypto.load_private_key(Path(options['key']).read_bytes())
                except (OSError, ValueError) as exc:
                    raise CommandError(str(exc)) from exc
                OperatorKey.objects.update_or_create(user=user, defaults={'public_key': keypair.public})
                self.stdout.write(self.style.SUCCESS(f'Chave de "{username}" registrada.'))

        self.stdout.write(self.style.SUCCESS('Processo finalizado com sucesso!'))
