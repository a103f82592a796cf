"""Modified Beer-Lambert conversion between optical density and hemoglobin."""

from __future__ import annotations

import numpy as np

from cogload.errors import LengthMismatch, SingularExtinction
from cogload.signal_core.types import ChannelSeries, MbllGeometry, Modality, OdPair


def _checked_system(geom: MbllGeometry) -> np.ndarray:
    det = np.linalg.det(geom.extinction)
    if not abs(det) > geom.det_tolerance:
        raise SingularExtinction(f"|det(extinction)| = {abs(det):.3g} <= {geom.det_tolerance:g}")
    return geom.system_matrix()


def od_to_concentration(od: np.ndarray, geom: MbllGeometry, scale: float = 1.0) -> np.ndarray:
    """Invert (n, 2) optical densities [780, 850] into (n, 2) [HbO2, HbR]."""
    od = np.asarray(od, dtype=np.float64)
    a = _checked_system(geom)
    conc = np.linalg.solve(a, od.T).T
    return conc * scale if scale != 1.0 else conc


def concentration_to_od(conc: np.ndarray, geom: MbllGeometry, scale: float = 1.0) -> np.ndarray:
    """Forward model: (n, 2) [HbO2, HbR] concentrations to (n, 2) optical densities."""
    conc = np.asarray(conc, dtype=np.float64)
    if scale != 1.0:
        conc = conc / scale
    return conc @ geom.system_matrix().T


def mbll_convert(
    od_780: ChannelSeries,
    od_850: ChannelSeries,
    geom: MbllGeometry,
    scale: float = 1.0,
    channel: str | None = None,
) -> tuple[ChannelSeries, ChannelSeries]:
    """Convert one dual-wavelength channel into HbO2 and HbR series.

    ``scale`` multiplies the mM result (1e3 gives micromolar). Output series are
    named ``hbo2_<channel>`` / ``hbr_<channel>``; ``channel`` defaults to the
    780 nm series name with its wavelength suffix stripped.
    """
    if len(od_780) != len(od_850):
        raise LengthMismatch(f"780 nm series has {len(od_780)} samples, 850 nm has {len(od_850)}")
    if channel is None:
        channel = od_780.name.rsplit("_", 1)[0]
    conc = od_to_concentration(np.column_stack([od_780.samples, od_850.samples]), geom, scale)
    common = dict(modality=Modality.FNIRS_HB, rate_hz=od_780.rate_hz, start_time_s=od_780.start_time_s)
    return (
        ChannelSeries(f"hbo2_{channel}", samples=conc[:, 0], **common),
        ChannelSeries(f"hbr_{channel}", samples=conc[:, 1], **common),
    )


def mbll_convert_pairs(pairs: list[OdPair], geom: MbllGeometry, scale: float = 1.0) -> np.ndarray:
    """Convert a list of OdPair samples; returns (n, 2) [HbO2, HbR]."""
    od = np.array([[p.od_780, p.od_850] for p in pairs], dtype=np.float64).reshape(-1, 2)
    return od_to_concentration(od, geom, scale)
