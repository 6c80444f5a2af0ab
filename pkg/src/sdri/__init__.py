"""Grid laboratory for a film/substrate free-boundary energy.

Configurations are unions of grid cells plus marked lattice edges.  The
package evaluates their surface and elastic energy and anneals the total
under volume constraints.  The analysis module checks the energy's structural
inequalities numerically.
"""

__version__ = "0.1.0"
