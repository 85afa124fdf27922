"""Numeric cross-checks of the moment identities for a concrete family."""
from __future__ import annotations

from dataclasses import dataclass

from .families import EtaVector, LocationFamily, expect, psi_expect
from .reference import PSI_IDENTITIES
from .symbolic import Symbol

__all__ = ["IdentityCheck", "identity_checks", "IDENTITY_TOL"]

IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.residual <= IDENTITY_TOL

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                "passed": self.passed}


def identity_checks(fam: LocationFamily, eta: EtaVector) -> list[IdentityCheck]:
    """Quadrature of both sides of every tabulated psi identity.

    ``fam`` must be standardized, since ``E psi_1^2 = 1`` is one of them.
    Also covers ``int f = 1`` and ``E psi_1 = E psi_2 = 0``.
    """
    out = [
        IdentityCheck("int f", expect(fam, lambda x: 1.0, "int f"), 1.0),
        IdentityCheck("E(psi1)", psi_expect(fam, (1,)), 0.0),
        IdentityCheck("E(psi2)", psi_expect(fam, (2,)), 0.0),
    ]
    values = {Symbol(k): v for k, v in eta.as_dict().items()}
    for idx, rhs in PSI_IDENTITIES.items():
        name = "E(" + "*".join(f"psi{i}" for i in idx) + ")"
        out.append(IdentityCheck(name, psi_expect(fam, idx, name), float(rhs.evaluate(values))))
    return out
