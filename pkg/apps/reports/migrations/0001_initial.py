# Generated by Django 5.1

import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(choices=[('solve', 'Solve'), ('round', 'Round'), ('verify', 'Verify'), ('bench', 'Bench')], max_length=10, verbose_name='Command')),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Failed')], default='completed', max_length=20, verbose_name='Status')),
                ('instance_digest', models.CharField(blank=True, db_index=True, max_length=64, verbose_name='Instance Digest')),
                ('objective', models.CharField(blank=True, max_length=20, verbose_name='Objective')),
                ('certified_ratio', models.FloatField(blank=True, null=True, verbose_name='Certified Ratio')),
                ('theorem_bound', models.FloatField(blank=True, null=True, verbose_name='Theorem Bound')),
                ('report', models.JSONField(default=dict, verbose_name='Report')),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now, verbose_name='Created At')),
                ('processing_time', models.DurationField(blank=True, null=True, verbose_name='Processing Time')),
                ('error_message', models.TextField(blank=True, verbose_name='Error Message')),
            ],
            options={
                'verbose_name': 'Run Record',
                'verbose_name_plural': 'Run Records',
                'ordering': ['-created_at'],
            },
        ),
    ]
