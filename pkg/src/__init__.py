"""HoloML - holographic phase retrieval under Poisson shot noise."""
