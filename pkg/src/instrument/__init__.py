from instrument.passes import (AlreadyInstrumentedError, InstrumentOptions,
                               instrument_cast_checks, instrument_escapes,
                               instrument_program, instrument_range_checks)
from instrument.sites import (CheckSite, SiteKind, WindowEntry, collect_sites,
                              format_window, parse_window, site_id)

__all__ = [
    "AlreadyInstrumentedError",
    "CheckSite",
    "InstrumentOptions",
    "SiteKind",
    "WindowEntry",
    "collect_sites",
    "format_window",
    "instrument_cast_checks",
    "instrument_escapes",
    "instrument_program",
    "instrument_range_checks",
    "parse_window",
    "site_id",
]
