from django.db import models


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ('completed', 'Completed'),
        ('partial', 'Partial'),
        ('failed', 'Failed'),
    ]

    method = models.CharField(max_length=20)
    seeds = models.JSONField(default=list)
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500, blank=True)
    acc_mean = models.FloatField(null=True, blank=True)
    acc_std = models.FloatField(null=True, blank=True)
    acc_task_il_mean = models.FloatField(null=True, blank=True)
    forgetting_mean = models.FloatField(null=True, blank=True)
    forgetting_std = models.FloatField(null=True, blank=True)
    wall_ms = models.FloatField(default=0.0)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='completed')
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        indexes = [
            models.Index(fields=['method'], name='continual_e_method_6d1c2a_idx'),
            models.Index(fields=['created_at'], name='continual_e_created_3f8b9e_idx'),
        ]
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.method} ({len(self.seeds)} seeds, {self.status})"

    @classmethod
    def record(cls, report, config):
        """Persist an aggregated run and one row per seed."""
        if not report.failures:
            status = 'completed'
        elif report.succeeded:
            status = 'partial'
        else:
            status = 'failed'
        run = cls.objects.create(
            method=report.method,
            seeds=[result.seed for result in report.results],
            config=config.as_dict(),
            output_dir=config.output_dir or '',
            acc_mean=report.acc[0],
            acc_std=report.acc[1],
            acc_task_il_mean=report.acc_task_il[0],
            forgetting_mean=report.forgetting[0],
            forgetting_std=report.forgetting[1],
            wall_ms=report.wall_ms,
            status=status,
        )
        SeedResult.objects.bulk_create([
            SeedResult(
                run=run,
                seed=result.seed,
                acc_class_il=result.final[1] if result.final else None,
                acc_task_il=result.final[2] if result.final else None,
                forgetting=result.final[3] if result.final else None,
                wall_ms=sum(result.wall_ms),
                error=result.error or '',
            )
            for result in report.results
        ])
        return run


class SeedResult(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='seed_results')
    seed = models.PositiveIntegerField()
    acc_class_il = models.FloatField(null=True, blank=True)
    acc_task_il = models.FloatField(null=True, blank=True)
    forgetting = models.FloatField(null=True, blank=True)
    wall_ms = models.FloatField(default=0.0)
    error = models.TextField(blank=True)

    class Meta:
        unique_together = ['run', 'seed']
        ordering = ['run', 'seed']

    def __str__(self):
        return f"Seed {self.seed} of run {self.run_id}"

    @property
    def failed(self):
        return bool(self.error)
