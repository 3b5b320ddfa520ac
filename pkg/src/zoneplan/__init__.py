"""Desk-level plug-load analytics and lighting-driven layout optimization.

The pipeline: load plug-load event data onto a 15-minute power grid
(`ingest`), abstract each occupant's power series into activity states
(`states`), measure per-zone schedule diversity (`diversity`), reduce
occupant schedules to a concept space (`reduce`), train lighting-energy
surrogates (`surrogate`), and search for occupant-to-desk layouts that
minimize predicted energy (`optimize`).  `synth` provides archetype-based
schedule generators and a rule-based lighting oracle for closed-loop
verification, and `cli` orchestrates the whole thing.
"""

__version__ = "0.1.0"
