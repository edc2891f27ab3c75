"""
JSON instance files.

    {"schema": 1, "d": 2, "k": 2, "vectors": [[1, 0], [0, 1]],
     "x": [1, 1], "objective": "D", "l_prime": null, "l": null}

``x``, ``objective``, ``l_prime`` and ``l`` are optional.
"""
import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np

from . import conf
from .exceptions import InvalidInstance
from .forms import InstanceForm
from .relax import Instance, ObjectiveKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InstanceFile:
    d: int
    k: int
    vectors: np.ndarray
    x: np.ndarray = None
    objective: str = None
    l_prime: int = None
    l: int = None

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InvalidInstance("An instance file must hold a JSON object")
        schema = data.get('schema', conf.get("SCHEMA"))
        if schema != conf.get("SCHEMA"):
            raise InvalidInstance(f"Unsupported instance schema {schema!r}")
        form = InstanceForm(data={key: data.get(key) for key in InstanceForm.base_fields})
        cleaned = form.validated()
        x = cleaned.get('x')
        return cls(
            d=cleaned['d'],
            k=cleaned['k'],
            vectors=np.array(cleaned['vectors'], dtype=float).reshape(len(cleaned['vectors']), cleaned['d']),
            x=None if x is None else np.array(x, dtype=float),
            objective=cleaned.get('objective') or None,
            l_prime=cleaned.get('l_prime'),
            l=cleaned.get('l'),
        )

    @classmethod
    def loads(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInstance(f"Instance file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def read(cls, path):
        try:
            with open(path, encoding='utf-8') as handle:
                text = handle.read()
        except OSError as exc:
            raise InvalidInstance(f"Cannot read instance file {path}: {exc}") from exc
        logger.debug("read instance file %s", path)
        return cls.loads(text)

    def to_dict(self):
        return {
            'schema': conf.get("SCHEMA"),
            'd': int(self.d),
            'k': int(self.k),
            'vectors': [[float(v) for v in row] for row in self.vectors],
            'x': None if self.x is None else [float(v) for v in self.x],
            'objective': self.objective,
            'l_prime': self.l_prime,
            'l': self.l,
        }

    def dumps(self):
        # repr of a float is the shortest text that reads back to the same value
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write(self, path):
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(self.dumps())
            handle.write('\n')

    def digest(self):
        """sha256 of the canonical JSON encoding."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def instance(self):
        return Instance(self.vectors, self.k)

    def objective_kind(self, name=None, l_prime=None, l=None):
        """The requested objective; explicit arguments win over the file's own."""
        name = name or self.objective
        if name is None:
            raise InvalidInstance("No objective given on the command line or in the instance file")
        return ObjectiveKind.parse(
            name,
            self.l_prime if l_prime is None else l_prime,
            self.l if l is None else l,
        ).validate(self.d)
