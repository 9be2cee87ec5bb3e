# mcblab - simulation and verification laboratory for infinite rate mutually catalytic branching
__version__ = "1.0.0"
