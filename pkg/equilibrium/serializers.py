from rest_framework import serializers
import numpy as np
import pandas as pd

from common.serializers import FiniteFloatField, PositiveFloatField


class GasParametersSerializer(serializers.Serializer):
    """
    Serializer for the polytropic gas constants.
    """
    gamma = FiniteFloatField(default=1.4)
    c_v = PositiveFloatField(default=1.0)
    g = PositiveFloatField(default=1.0)

    def validate_gamma(self, value):
        if not 1.0 < value < 2.0:
            raise serializers.ValidationError("gamma must lie strictly between 1 and 2.")
        return value


class EntropyLawSerializer(serializers.Serializer):
    """
    Serializer for entropy laws: isentropic, linear (Sigma = -beta eta) or table.
    """
    KIND_CHOICES = ['isentropic', 'linear', 'table']

    kind = serializers.ChoiceField(choices=KIND_CHOICES, default='isentropic')
    value = FiniteFloatField(default=0.0)
    beta = FiniteFloatField(required=False)
    table = serializers.ListField(
        child=serializers.ListField(child=FiniteFloatField(), min_length=2, max_length=2),
        required=False,
    )
    table_file = serializers.CharField(required=False, allow_blank=False)
    eta_max = PositiveFloatField(required=False)

    def validate(self, attrs):
        kind = attrs.get('kind', 'isentropic')
        if kind == 'linear' and 'beta' not in attrs:
            raise serializers.ValidationError({'beta': "Required for a linear entropy law."})
        if kind == 'table':
            if 'table' not in attrs and 'table_file' in attrs:
                try:
                    frame = pd.read_csv(attrs['table_file'])
                except (OSError, ValueError) as e:
                    raise serializers.ValidationError({'table_file': f"Cannot read table: {e}"})
                if frame.shape[1] < 2:
                    raise serializers.ValidationError({'table_file': "Two columns (eta, sigma) are required."})
                attrs['table'] = frame.iloc[:, :2].astype(float).values.tolist()
            rows = attrs.get('table')
            if not rows or len(rows) < 2:
                raise serializers.ValidationError({'table': "At least two (eta, sigma) rows are required."})
            eta = np.array([row[0] for row in rows])
            if np.any(eta < 0.0) or np.any(np.diff(eta) <= 0.0):
                raise serializers.ValidationError({'table': "The eta column must be nonnegative and strictly increasing."})
        return attrs

    def to_descriptor(self):
        data = dict(self.validated_data)
        data.pop('table_file', None)
        kind = data['kind']
        descriptor = {'kind': kind}
        if kind == 'isentropic':
            descriptor['value'] = data.get('value', 0.0)
        elif kind == 'linear':
            descriptor['beta'] = data['beta']
        else:
            descriptor['table'] = data['table']
        if 'eta_max' in data:
            descriptor['eta_max'] = data['eta_max']
        return descriptor


class ProfileDescriptorSerializer(serializers.Serializer):
    """
    Serializer for the JSON descriptor of an equilibrium profile.
    """
    gas = GasParametersSerializer(required=False)
    law = EntropyLawSerializer(required=False)
    z_plus = PositiveFloatField(default=1.0)

    def to_descriptor(self):
        """Validated descriptor with every default filled in."""
        gas = GasParametersSerializer(data=self.initial_data.get('gas', {}))
        gas.is_valid(raise_exception=True)
        law = EntropyLawSerializer(data=self.initial_data.get('law', {}))
        law.is_valid(raise_exception=True)
        return {
            'gas': dict(gas.validated_data),
            'law': law.to_descriptor(),
            'z_plus': self.validated_data['z_plus'],
        }
