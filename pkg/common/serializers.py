from rest_framework import serializers
import math


class FiniteFloatField(serializers.FloatField):
    """
    Float field rejecting NaN and infinities.
    """

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not math.isfinite(value):
            raise serializers.ValidationError("A finite number is required.")
        return value


class PositiveFloatField(FiniteFloatField):
    """
    Float field for strictly positive quantities.
    """
    default_error_messages = {
        'not_positive': 'Ensure this value is greater than 0.',
    }

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if value <= 0:
            self.fail('not_positive')
        return value


def flatten_errors(errors, prefix: str = ''):
    """
    Flatten nested serializer errors into ``field.path: message`` strings.

    Args:
        errors: ``serializer.errors`` (dict, list or string)
        prefix: Dotted path of the enclosing field

    Returns:
        Sorted list of diagnostics
    """
    flat = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            flat.extend(flatten_errors(value, path))
    elif isinstance(errors, list):
        for index, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                flat.extend(flatten_errors(value, f"{prefix}[{index}]" if prefix else f"[{index}]"))
            else:
                flat.append(f"{prefix or 'non_field_errors'}: {value}")
    else:
        flat.append(f"{prefix or 'non_field_errors'}: {errors}")
    return sorted(flat)
