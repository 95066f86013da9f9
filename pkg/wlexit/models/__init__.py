"""
Models driven by the Wang-Landau engine: the three-state chain and the 2D double well.
"""
