"""Pathloss models.

A scenario table picks its model by class path, e.g.

::

    pathloss_model: mrpchan.pathloss.InhNlosPathloss

Models return a *gain* in dB, i.e. negative numbers for real links.
"""
import abc
import math

from .core import ChannelDomainError

__all__ = ("InhNlosPathloss", "PathlossModel", "pathloss_inh_nlos")


def pathloss_inh_nlos(fc_ghz: float, d3d_m: float) -> float:
    """Indoor hotspot NLoS pathloss gain, carrier frequency normalized
    by 1 GHz."""
    if fc_ghz <= 0:
        raise ChannelDomainError(f"Carrier frequency must be positive, got {fc_ghz}")
    if d3d_m <= 0:
        raise ChannelDomainError(f"3D distance must be positive, got {d3d_m}")
    return -17.3 - 24.9 * math.log10(fc_ghz) - 38.3 * math.log10(d3d_m)


class PathlossModel(abc.ABC):
    """Log-distance pathloss model.

    Subclasses implement :meth:`gain_db` and set :attr:`slope_db` (the
    loss in dB per decade of distance). Inversion relies on the
    log-distance form.
    """

    slope_db: float

    @abc.abstractmethod
    def gain_db(self, fc_ghz: float, d3d_m: float) -> float:
        pass

    def distance_for_gain(self, fc_ghz: float, gain_db: float) -> float:
        if not math.isfinite(gain_db):
            raise ChannelDomainError(f"Unattainable pathloss gain: {gain_db}")
        intercept = self.gain_db(fc_ghz, 1.0)
        try:
            distance = math.pow(10.0, (intercept - gain_db) / self.slope_db)
        except OverflowError:
            raise ChannelDomainError(f"Unattainable pathloss gain: {gain_db} dB")
        if not 0 < distance < math.inf:
            raise ChannelDomainError(f"Unattainable pathloss gain: {gain_db} dB")
        return distance


class InhNlosPathloss(PathlossModel):
    slope_db = 38.3

    def gain_db(self, fc_ghz: float, d3d_m: float) -> float:
        return pathloss_inh_nlos(fc_ghz, d3d_m)

    def __eq__(self, other):
        return type(other) is type(self)

    def __hash__(self):
        return hash(type(self))

    def __repr__(self):
        return f"{type(self).__name__}()"
