from django.contrib import admin

from .models import SerialCounter


@admin.register(SerialCounter)
class SerialCounterAdmin(admin.ModelAdmin):
    list_display = ('authority', 'scope', 'value')
    list_filter = ('authority',)
    readonly_fields = ('authority', 'scope', 'value')
