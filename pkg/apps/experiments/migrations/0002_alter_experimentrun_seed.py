# Generated by Django 5.2.4 on 2026-10-17 14:03

from django.db import migrations, models


class Migration(migrations.Migration):
    dependencies = [
        ("experiments", "0001_initial"),
    ]

    operations = [
        migrations.AlterField(
            model_name="experimentrun",
            name="seed",
            field=models.CharField(max_length=20),
        ),
    ]
