from django.contrib import admin

from .models import CrlPublication, IssuedPseudonym, RevokedPseudonym, TicketUsage


class ReadOnlyAdmin(admin.ModelAdmin):
    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False


class IssuedPseudonymInline(admin.TabularInline):
    model = IssuedPseudonym; extra = 0; can_delete = False
    fields = ('serial', 'interval_start', 'interval_end', 'issued_at'); readonly_fields = fields


@admin.register(TicketUsage)
class TicketUsageAdmin(ReadOnlyAdmin):
    list_display = ('ticket_serial', 'ticket_issuer', 'authority', 'interval_start', 'interval_end', 'used_at')
    list_filter = ('authority', 'ticket_issuer')
    inlines = [IssuedPseudonymInline]


@admin.register(RevokedPseudonym)
class RevokedPseudonymAdmin(ReadOnlyAdmin):
    list_display = ('serial', 'authority', 'crl_sequence', 'revoked_at')
    list_filter = ('authority',)


@admin.register(CrlPublication)
class CrlPublicationAdmin(ReadOnlyAdmin):
    list_display = ('sequence', 'authority', 'issued_at', 'entry_count')
    list_filter = ('authority',)
