from django import forms

from .exceptions import InvalidInstance


OBJECTIVE_CHOICES = [
    ('D', 'D-design (determinant)'),
    ('A', 'A-design (trace of inverse)'),
    ('E', 'E-design (minimum eigenvalue)'),
    ('ratio', 'Generalized ratio E_l\' / E_l'),
]


class InstanceForm(forms.Form):
    """Validates the fields of an instance file before any numerical work."""
    schema = forms.IntegerField(required=False, min_value=1)
    d = forms.IntegerField(min_value=1)
    k = forms.IntegerField(min_value=1)
    vectors = forms.JSONField()
    x = forms.JSONField(required=False)
    objective = forms.ChoiceField(choices=OBJECTIVE_CHOICES, required=False)
    l_prime = forms.IntegerField(required=False, min_value=0)
    l = forms.IntegerField(required=False, min_value=1)

    def clean_vectors(self):
        vectors = self.cleaned_data['vectors']
        if not isinstance(vectors, list) or not vectors:
            raise forms.ValidationError("vectors must be a non-empty list of rows")
        for row in vectors:
            if not isinstance(row, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
                raise forms.ValidationError("every vector must be a list of numbers")
        return vectors

    def clean_x(self):
        x = self.cleaned_data.get('x')
        if x in (None, ''):
            return None
        if not isinstance(x, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
            raise forms.ValidationError("x must be a list of numbers")
        return x

    def clean(self):
        cleaned = super().clean()
        d, k, vectors = cleaned.get('d'), cleaned.get('k'), cleaned.get('vectors')
        if d is None or k is None or vectors is None:
            return cleaned
        if k < d:
            self.add_error('k', f"budget k={k} is below the dimension d={d}")
        if any(len(row) != d for row in vectors):
            self.add_error('vectors', f"every vector must have d={d} entries")
        x = cleaned.get('x')
        if x is not None and len(x) != len(vectors):
            self.add_error('x', f"x has {len(x)} entries for {len(vectors)} vectors")
        if cleaned.get('objective') == 'ratio':
            l_prime, l = cleaned.get('l_prime'), cleaned.get('l')
            if l_prime is None or l is None:
                self.add_error('l', "the ratio objective needs l_prime and l")
            elif not 0 <= l_prime < l <= d:
                self.add_error('l', f"need 0 <= l_prime < l <= d, got ({l_prime}, {l})")
        return cleaned

    def validated(self):
        """cleaned_data, or InvalidInstance listing every field error."""
        if not self.is_valid():
            messages = [f"{field}: {' '.join(errors)}" for field, errors in self.errors.items()]
            raise InvalidInstance("; ".join(messages))
        return self.cleaned_data
