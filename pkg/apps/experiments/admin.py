from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ("command", "status", "exit_code", "seed", "config_hash", "version", "created_at")
    list_filter = ("command", "status", "created_at")
    search_fields = ("config_hash", "output_dir")
    date_hierarchy = "created_at"
    ordering = ("-created_at",)
    readonly_fields = ("created_at", "updated_at")

    fieldsets = (
        (None, {"fields": ("command", "seed", "config_hash", "version")}),
        ("Outcome", {"fields": ("status", "exit_code", "message", "output_dir")}),
        (
            "Timestamps",
            {"fields": ("created_at", "updated_at"), "classes": ("collapse",)},
        ),
    )
