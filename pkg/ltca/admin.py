from django.contrib import admin

from .models import ForeignTicketExchange, IssuedLtc, TicketLedgerEntry, VehicleRecord


class IssuedLtcInline(admin.TabularInline):
    model = IssuedLtc; extra = 0; can_delete = False
    fields = ('serial', 'validity_start', 'validity_end', 'current', 'issued_at'); readonly_fields = fields


@admin.register(VehicleRecord)
class VehicleRecordAdmin(admin.ModelAdmin):
    list_display = ('subject_id', 'authority', 'revoked', 'registered_at')
    list_filter = ('authority', 'revoked'); search_fields = ('subject_id',)
    inlines = [IssuedLtcInline]


# O ledger é só leitura no admin: mexer nele quebraria a exclusão Sybil.
@admin.register(TicketLedgerEntry)
class TicketLedgerEntryAdmin(admin.ModelAdmin):
    list_display = ('ticket_serial', 'authority', 'vehicle', 'interval_start', 'interval_end', 'expires_at')
    list_filter = ('authority',); search_fields = ('vehicle__subject_id',)

    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False


@admin.register(ForeignTicketExchange)
class ForeignTicketExchangeAdmin(admin.ModelAdmin):
    list_display = ('ticket_serial', 'authority', 'ftkt_issuer', 'ftkt_serial', 'interval_start', 'interval_end')
    list_filter = ('authority', 'ftkt_issuer')

    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False
