from django.contrib import admin

from .models import AuditLogEntry, OperatorKey


@admin.register(AuditLogEntry)
class AuditLogEntryAdmin(admin.ModelAdmin):
    list_display = ('created_at', 'operator', 'pseudonym_issuer', 'pseudonym_serial', 'outcome', 'subject_id')
    list_filter = ('outcome', 'authority'); search_fields = ('operator', 'subject_id')
    readonly_fields = [f.name for f in AuditLogEntry._meta.fields]

    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False

    def has_delete_permission(self, request, obj=None):
        return False


@admin.register(OperatorKey)
class OperatorKeyAdmin(admin.ModelAdmin):
    list_display = ('user',)
