#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from rest_framework import serializers

SUMMARY_FIELDS = ["dataset", "mode", "count", "errors", "error_rate", "mean_margin", "mean_reconstruction"]


class EvalReportSerializer(serializers.Serializer):
    """Shapes an EvalReport for the CSV report and the command output"""
    dataset = serializers.CharField()
    mode = serializers.ChoiceField(choices=["single", "multi"])
    count = serializers.IntegerField(min_value=0)
    errors = serializers.IntegerField(min_value=0)
    error_rate = serializers.FloatField(min_value=0, max_value=1)
    mean_margin = serializers.FloatField()
    mean_reconstruction = serializers.FloatField()
    confusion = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField(min_value=0)))

    def summary_row(self) -> list:
        return [self.data[name] for name in SUMMARY_FIELDS]
