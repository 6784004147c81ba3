"""
bellbound: classical bounds, maximal Bell violations and dilation bounds
"""

from bellbound_conf import VERSION as __version__
