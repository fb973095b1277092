from .fragment import FragmentRates, fragment_bits

__all__ = ["FragmentRates", "fragment_bits"]
