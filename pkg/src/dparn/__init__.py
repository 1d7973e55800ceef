"""Full-band speech enhancement with a dual-path attention-recurrent network."""

__version__ = "0.1.0"
