"""Order-book reconstruction, MRR-style impact estimators, fundamental-price
proxies and a ground-truth simulator."""

__version__ = "0.1.0"
