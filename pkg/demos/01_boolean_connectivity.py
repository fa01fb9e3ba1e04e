"""Boolean-model connectivity: free components, wired counting, crossings.

Points are joined when their distance is at most twice the ball radius; the
window boundary can join in as one extra "ghost" component (wired counting).
"""
import numpy as np

from wrlab import (
    Configuration,
    ConnectivityParams,
    Window,
    boundary_connected_count,
    build_components,
    has_crossing,
)

window = Window.cube(10.0, 2)
a = 1.0

# a chain of points spaced exactly 2a, plus one distant straggler
chain = np.array([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0], [7.0, 5.0], [9.0, 5.0]])
conf = Configuration(np.vstack([chain, [[8.5, 1.0]]]))

free = build_components(conf, ConnectivityParams(a), window)
print(f"{len(conf)} points, {free.num_components_free} free components")
print("labels:", free.labels.tolist())

wired = build_components(conf, ConnectivityParams(a, wired=True), window)
print(
    f"wired component count {wired.num_components_wired} "
    f"(boundary-touching components merge with the ghost boundary)"
)

print("chain crosses left-right:", has_crossing(free, conf, window, axis=0))
print("chain crosses bottom-top:", has_crossing(free, conf, window, axis=1))

delta = Window(np.array([4.0, 4.0]), np.array([6.0, 6.0]))
n_delta = boundary_connected_count(wired, conf, delta)
print(f"points in the central box wired to the boundary: {n_delta}")

# removing one link breaks the crossing
broken = Configuration(np.delete(conf.points, 2, axis=0))
lab = build_components(broken, ConnectivityParams(a), window)
print("after removing the middle point, crossing:", has_crossing(lab, broken, window, 0))
