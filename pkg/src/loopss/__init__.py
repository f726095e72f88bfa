"""loopss: an exact-arithmetic Serre spectral sequence engine.

Builds tensor-product second pages for fibration scenarios over Z, Q or
F_p, extends differential assignments by the Leibniz rule, turns pages by
exact homology, transports differentials along maps of fibrations, and
audits convergence and collapse.
"""

__version__ = "0.1.0"
