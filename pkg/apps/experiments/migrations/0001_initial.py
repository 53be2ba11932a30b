# Generated by Django 5.2.4 on 2026-10-17 09:12

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "command",
                    models.CharField(
                        choices=[
                            ("kernel-check", "kernel-check"),
                            ("density", "density"),
                            ("transform-check", "transform-check"),
                            ("pls-sweep", "pls-sweep"),
                            ("multiband", "multiband"),
                            ("nazarov-turan", "nazarov-turan"),
                            ("bernstein", "bernstein"),
                            ("damped-wave", "damped-wave"),
                        ],
                        max_length=32,
                    ),
                ),
                ("seed", models.BigIntegerField()),
                ("config_hash", models.CharField(db_index=True, max_length=64)),
                ("version", models.CharField(max_length=32)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("running", "Running"),
                            ("succeeded", "Succeeded"),
                            ("invalid", "Invalid"),
                            ("not_converged", "Not converged"),
                            ("io_failed", "I/O failed"),
                        ],
                        default="running",
                        max_length=16,
                    ),
                ),
                ("exit_code", models.SmallIntegerField(blank=True, null=True)),
                ("output_dir", models.CharField(max_length=1024)),
                ("message", models.TextField(blank=True, default="")),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
            ],
            options={
                "verbose_name": "Experiment Run",
                "verbose_name_plural": "Experiment Runs",
                "ordering": ["-created_at"],
            },
        ),
    ]
