# Generated by Django 4.2.7 on 2026-10-18 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('method', models.CharField(max_length=20)),
                ('seeds', models.JSONField(default=list)),
                ('config', models.JSONField(default=dict)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('acc_mean', models.FloatField(blank=True, null=True)),
                ('acc_std', models.FloatField(blank=True, null=True)),
                ('acc_task_il_mean', models.FloatField(blank=True, null=True)),
                ('forgetting_mean', models.FloatField(blank=True, null=True)),
                ('forgetting_std', models.FloatField(blank=True, null=True)),
                ('wall_ms', models.FloatField(default=0.0)),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('partial', 'Partial'), ('failed', 'Failed')], default='completed', max_length=20)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['method'], name='continual_e_method_6d1c2a_idx'), models.Index(fields=['created_at'], name='continual_e_created_3f8b9e_idx')],
            },
        ),
        migrations.CreateModel(
            name='SeedResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('seed', models.PositiveIntegerField()),
                ('acc_class_il', models.FloatField(blank=True, null=True)),
                ('acc_task_il', models.FloatField(blank=True, null=True)),
                ('forgetting', models.FloatField(blank=True, null=True)),
                ('wall_ms', models.FloatField(default=0.0)),
                ('error', models.TextField(blank=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='seed_results', to='continual.experimentrun')),
            ],
            options={
                'ordering': ['run', 'seed'],
                'unique_together': {('run', 'seed')},
            },
        ),
    ]
