"""fragpocket: mine pseudo-ligand/pocket complexes and learn aligned pocket embeddings."""

__version__ = "0.1.0"
