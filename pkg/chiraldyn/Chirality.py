__author__ = "chiraldyn developers"
__year__ = "2026"

#LIBRARIES
import enum
from dataclasses import dataclass
import numpy as np
import chiraldyn.Utils as utils

"""
Chirality of the two control beams and the coupling kind it selects.

The time-dependent phase of the plane wave is dropped, so fields are compared as spatial
profiles. A right-handed beam travelling along -z traces the same profile as a left-handed
beam travelling along +z; the coupling kind follows from the parity handedness x direction.
"""

RB87_D1_WAVELENGTH_NM = 795.0


class Handedness(enum.Enum):
    RHCP = 1
    LHCP = -1

    @classmethod
    def Parse(cls, value):
        if isinstance(value, cls): return value
        table = {'R': cls.RHCP, 'RHCP': cls.RHCP, 'L': cls.LHCP, 'LHCP': cls.LHCP}
        try:
            return table[str(value).upper()]
        except KeyError:
            raise utils.InvalidArgumentError("ERROR: handedness must be one of 'R', 'L', got {!r}".format(value)) from None


class Direction(enum.Enum):
    PlusZ = 1
    MinusZ = -1

    @classmethod
    def Parse(cls, value):
        if isinstance(value, cls): return value
        table = {'+z': cls.PlusZ, 'z': cls.PlusZ, '-z': cls.MinusZ}
        try:
            return table[str(value).lower()]
        except KeyError:
            raise utils.InvalidArgumentError("ERROR: direction must be one of '+z', '-z', got {!r}".format(value)) from None


class CouplingKind(enum.Enum):
    """Dissipative beamsplitter (passive exchange) or non-Hermitian parametric amplifier."""
    DBS = 'DBS'
    NHPA = 'NHPA'


@dataclass(frozen=True)
class BeamConfig:
    """
    One circularly polarised control beam.

    :parameter handedness: Required (Handedness)
    :parameter direction:  Required (Direction)
    :parameter E0:         Optional (flt) >= 0: field amplitude, arbitrary units
    :parameter k:          Optional (flt) > 0: wavenumber in rad/m, default Rb D1
    :parameter detuning:   Optional (flt): rad/s relative to two-photon resonance
    """
    handedness: Handedness
    direction: Direction
    E0: float = 1.0
    k: float = 2*np.pi/(RB87_D1_WAVELENGTH_NM*1e-9)
    detuning: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'handedness', Handedness.Parse(self.handedness))
        object.__setattr__(self, 'direction', Direction.Parse(self.direction))
        if self.E0 < 0: raise utils.InvalidArgumentError("ERROR: E0 must be >= 0")
        if self.k <= 0: raise utils.InvalidArgumentError("ERROR: k must be > 0")

    @classmethod
    def FromPower(cls, handedness, direction, power_uW=1.0, detuning_hz=0.0, wavelength_nm=RB87_D1_WAVELENGTH_NM):
        """
        Builds a beam from laboratory units; the amplitude scales as sqrt(power).

        :parameter power_uW:    Optional (flt): optical power in microwatt
        :parameter detuning_hz: Optional (flt): detuning in Hz
        """
        if power_uW < 0: raise utils.InvalidArgumentError("ERROR: power_uW must be >= 0")
        return cls(handedness, direction, E0=float(np.sqrt(power_uW)), k=2*np.pi/(wavelength_nm*1e-9),
                   detuning=utils.HzToRad(detuning_hz))


def CircularField(beam, z):
    """
    Spatial field profile (Ex, Ey) of a circular beam at position z, time term dropped.

    RHCP,+z -> (E0 cos kz,  E0 sin kz); LHCP,+z -> (E0 cos kz, -E0 sin kz);
    reversing the direction mirrors the y component.

    :parameter beam: Required (BeamConfig)
    :parameter z:    Required (flt or array): position in m
    :return: (Ex, Ey)
    """
    phase = beam.k*np.asarray(z, dtype=float)
    sign = beam.handedness.value*beam.direction.value
    return beam.E0*np.cos(phase), sign*beam.E0*np.sin(phase)


def EffectiveChirality(beam):
    """
    Chirality the atoms perceive: +1 for RHCP along +z, sign flips with handedness or direction.

    :return: (int) +1 or -1
    """
    return beam.handedness.value*beam.direction.value


def GetCouplingKind(beam1, beam2):
    """
    Same perceived chirality -> DBS, opposite -> NHPA.

    :parameter beam1: Required (BeamConfig): control of channel 1
    :parameter beam2: Required (BeamConfig): control of channel 2
    :return: CouplingKind
    """
    if EffectiveChirality(beam1) == EffectiveChirality(beam2):
        return CouplingKind.DBS
    return CouplingKind.NHPA
