import numpy as np, sys, time
sys.path.insert(0, "/root/pkg/src")
from contourdyn.geometry import VortexSystem, ellipse_radius, scaled_profile_region, area_function
from contourdyn.kernels import hamiltonian
from contourdyn.invariants import first_moment
from contourdyn.dynamics import SimState, step_monopole

reg = scaled_profile_region(1.0, ellipse_radius(1.5, 1.0), 0.1, n_phi=128, n_w=48)
sys0 = VortexSystem((reg,))
probes = np.linspace(0.1, 0.9, 8)
h0 = hamiltonian(sys0); c0 = first_moment(sys0)
a0 = area_function(reg.field, probes)
print("t=0 H=%.10f c=%s" % (h0, c0), flush=True)
state = SimState(0.0, sys0)
t0 = time.time()
dt = 1e-3
for i in range(500):
    state = step_monopole(state, dt)
    if (i+1) % 50 == 0:
        s = state.system
        h = hamiltonian(s); c = first_moment(s)
        a = area_function(s.regions[0].field, probes)
        print("t=%.3f dH/H=%.3e dc=%.3e dA/A max=%.3e  wall=%.0fs" % (
            state.t, (h-h0)/abs(h0), abs(c-c0), np.max(np.abs((a-a0)/a0)), time.time()-t0), flush=True)
print("DONE", flush=True)
