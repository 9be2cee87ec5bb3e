from . import duality, measures, reference, report, simulate, verify

# registration order is the order shown in --help
COMMANDS = [measures, simulate, reference, duality, verify, report]

__all__ = ["COMMANDS"]
