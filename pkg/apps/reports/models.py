from django.db import models
from django.utils import timezone
from django.utils.translation import gettext_lazy as _


class RunRecord(models.Model):
    """A command run persisted with ``--save``."""
    COMMAND_CHOICES = [
        ('solve', _('Solve')),
        ('round', _('Round')),
        ('verify', _('Verify')),
        ('bench', _('Bench')),
    ]
    STATUS_CHOICES = [
        ('completed', _('Completed')),
        ('failed', _('Failed')),
    ]

    command = models.CharField(_("Command"), max_length=10, choices=COMMAND_CHOICES)
    status = models.CharField(_("Status"), max_length=20, choices=STATUS_CHOICES, default='completed')

    instance_digest = models.CharField(_("Instance Digest"), max_length=64, blank=True, db_index=True)
    objective = models.CharField(_("Objective"), max_length=20, blank=True)
    certified_ratio = models.FloatField(_("Certified Ratio"), null=True, blank=True)
    theorem_bound = models.FloatField(_("Theorem Bound"), null=True, blank=True)

    # Full report as rendered
    report = models.JSONField(_("Report"), default=dict)

    created_at = models.DateTimeField(_("Created At"), default=timezone.now)
    processing_time = models.DurationField(_("Processing Time"), null=True, blank=True)
    error_message = models.TextField(_("Error Message"), blank=True)

    class Meta:
        verbose_name = _("Run Record")
        verbose_name_plural = _("Run Records")
        ordering = ['-created_at']

    def __str__(self):
        label = self.objective or '-'
        return f"{self.command} {label} - {self.created_at:%Y-%m-%d %H:%M:%S}"

    @property
    def within_bound(self):
        if self.certified_ratio is None or self.theorem_bound is None:
            return None
        return self.certified_ratio <= self.theorem_bound * (1 + 1e-6)
