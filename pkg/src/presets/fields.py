"""Catalog of named analytic field forms.

Field expansions and initial data are given in configuration files as one
of the forms below, selected by their ``kind`` key:

- ``zero``: identically 0
- ``constant``: a fixed value
- ``mode``: c·cos(mτ + φ)·p(x) with p a polynomial of degree ≤ 2
- ``gaussian_mode``: the mode form times exp(−Σ_d (x_d − c_d)² / (2 w_d²))
"""

from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.errors import InputError
from src.numerics.grid import FloatArray


class Polynomial(BaseModel):
    """Polynomial p(x) = constant + Σ linear_d x_d + Σ quadratic_de x_d x_e.

    Attributes:
        constant: Constant coefficient
        linear: One coefficient per coordinate (missing entries are 0)
        quadratic: Rows of second-order coefficients (missing entries are 0)
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    constant: float = 1.0
    linear: list[float] = Field(default_factory=list)
    quadratic: list[list[float]] = Field(default_factory=list)

    def evaluate(self, coords: FloatArray) -> FloatArray:
        """Evaluate at coordinates of shape (dims, P).

        Raises:
            InputError: If more coefficients than coordinates are given
        """
        dims = coords.shape[0]
        if len(self.linear) > dims or len(self.quadratic) > dims:
            raise InputError(f"polynomial has more coefficients than the {dims} coordinates")
        value = np.full(coords.shape[1], self.constant, dtype=np.float64)
        for d, c in enumerate(self.linear):
            value += c * coords[d]
        for d, row in enumerate(self.quadratic):
            if len(row) > dims:
                raise InputError(f"quadratic row {d} is longer than the {dims} coordinates")
            for e, c in enumerate(row):
                value += c * coords[d] * coords[e]
        return value

    def is_odd(self) -> bool:
        """Whether p(−x) = −p(x)."""
        return self.constant == 0.0 and all(c == 0.0 for row in self.quadratic for c in row)


class ZeroForm(BaseModel):
    """The identically zero field."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["zero"] = "zero"

    def evaluate(self, t: float, tau: float, coords: FloatArray) -> FloatArray:
        return np.zeros(coords.shape[1])

    @property
    def is_zero(self) -> bool:
        return True

    @property
    def tau_independent(self) -> bool:
        return True


class ConstantForm(BaseModel):
    """A constant field.

    Attributes:
        value: The constant
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["constant"] = "constant"
    value: float

    def evaluate(self, t: float, tau: float, coords: FloatArray) -> FloatArray:
        return np.full(coords.shape[1], self.value, dtype=np.float64)

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    @property
    def tau_independent(self) -> bool:
        return True


class ModeForm(BaseModel):
    """Single τ-mode c·cos(mτ + φ)·p(x).

    Attributes:
        amplitude: Coefficient c
        harmonic: Integer harmonic m ≥ 0
        phase: Phase φ
        poly: Polynomial envelope p
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["mode"] = "mode"
    amplitude: float = 1.0
    harmonic: int = Field(default=0, ge=0)
    phase: float = 0.0
    poly: Polynomial = Field(default_factory=Polynomial)

    def _oscillation(self, tau: float) -> float:
        return self.amplitude * float(np.cos(self.harmonic * tau + self.phase))

    def evaluate(self, t: float, tau: float, coords: FloatArray) -> FloatArray:
        return self._oscillation(tau) * self.poly.evaluate(coords)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    @property
    def tau_independent(self) -> bool:
        return self.harmonic == 0


class GaussianModeForm(BaseModel):
    """Single τ-mode with a Gaussian envelope.

    Attributes:
        amplitude: Coefficient c
        harmonic: Integer harmonic m ≥ 0
        phase: Phase φ
        poly: Polynomial factor p
        center: Center of the envelope (missing entries are 0)
        width: Envelope width, one value or one per coordinate
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["gaussian_mode"] = "gaussian_mode"
    amplitude: float = 1.0
    harmonic: int = Field(default=0, ge=0)
    phase: float = 0.0
    poly: Polynomial = Field(default_factory=Polynomial)
    center: list[float] = Field(default_factory=list)
    width: float | list[float] = 1.0

    @field_validator("width")
    @classmethod
    def validate_width(cls, v: float | list[float]) -> float | list[float]:
        """Validate that every width is positive.

        Args:
            v: Width or widths

        Returns:
            The validated width

        Raises:
            ValueError: If a width is not positive
        """
        widths = v if isinstance(v, list) else [v]
        if not widths or any(w <= 0.0 for w in widths):
            raise ValueError("widths must be positive")
        return v

    def envelope(self, coords: FloatArray) -> FloatArray:
        """Return exp(−Σ_d (x_d − c_d)² / (2 w_d²)).

        Raises:
            InputError: If center or widths have more entries than coordinates
        """
        dims = coords.shape[0]
        widths = self.width if isinstance(self.width, list) else [self.width] * dims
        if len(self.center) > dims or len(widths) != dims:
            raise InputError(f"gaussian center/width do not match {dims} coordinates")
        center = list(self.center) + [0.0] * (dims - len(self.center))
        exponent = np.zeros(coords.shape[1])
        for d in range(dims):
            exponent += (coords[d] - center[d]) ** 2 / (2.0 * widths[d] ** 2)
        return np.exp(-exponent)

    def evaluate(self, t: float, tau: float, coords: FloatArray) -> FloatArray:
        oscillation = self.amplitude * float(np.cos(self.harmonic * tau + self.phase))
        return oscillation * self.poly.evaluate(coords) * self.envelope(coords)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    @property
    def tau_independent(self) -> bool:
        return self.harmonic == 0


FieldForm = Annotated[
    ZeroForm | ConstantForm | ModeForm | GaussianModeForm, Field(discriminator="kind")
]


def form_at(forms: list[FieldForm], order: int) -> FieldForm:
    """Return the form of a given expansion order, zero beyond the list."""
    return forms[order] if order < len(forms) else ZeroForm()


def is_symmetric_initial(form: FieldForm) -> bool:
    """Whether an initial-data form satisfies f(−x) = f(x)."""
    if isinstance(form, ZeroForm | ConstantForm):
        return True
    if isinstance(form, GaussianModeForm):
        centered = all(c == 0.0 for c in form.center)
        poly = form.poly
        even = not poly.linear or all(c == 0.0 for c in poly.linear)
        return centered and even
    return not form.poly.linear or all(c == 0.0 for c in form.poly.linear)


def is_odd_field(form: FieldForm) -> bool:
    """Whether a field form satisfies f(−x) = −f(x)."""
    if isinstance(form, ZeroForm):
        return True
    if isinstance(form, ConstantForm):
        return form.value == 0.0
    if isinstance(form, GaussianModeForm):
        return all(c == 0.0 for c in form.center) and form.poly.is_odd()
    return form.poly.is_odd()
