"""Figure renderers for cachebound CSV artifacts.

Reads only the documented CSV formats; has no dependency on the core
package.
"""

__version__ = "0.1.0"

from .render import render_boundary, render_heatmap
