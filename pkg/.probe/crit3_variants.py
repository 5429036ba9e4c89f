import numpy as np, sys, time
sys.path.insert(0, "/root/pkg/src")
import contourdyn.kernels as K
from contourdyn.geometry import VortexSystem, ellipse_radius, scaled_profile_region, area_function
from contourdyn.kernels import hamiltonian
from contourdyn.invariants import first_moment
from contourdyn.dynamics import SimState, step_monopole

U = int(sys.argv[1])
K.UPSAMPLE_FACTOR = U
reg = scaled_profile_region(1.0, ellipse_radius(1.5, 1.0), 0.1, n_phi=128, n_w=48)
sys0 = VortexSystem((reg,))
probes = reg.field.levels[np.linspace(3, 44, 8).astype(int)]
h0 = hamiltonian(sys0); a0 = area_function(reg.field, probes)
print("U=%d t=0 H=%.10f" % (U, h0), flush=True)
state = SimState(0.0, sys0)
t0 = time.time()
for i in range(50):
    state = step_monopole(state, 1e-3)
    if (i+1) % 10 == 0:
        s = state.system
        h = hamiltonian(s); a = area_function(s.regions[0].field, probes)
        c = first_moment(s)
        print("t=%.3f dH/H=%.3e |c|=%.2e dA/A=%.2e wall=%.0fs" % (
            state.t, (h-h0)/abs(h0), abs(c), np.max(np.abs((a-a0)/a0)), time.time()-t0), flush=True)
print("DONE", flush=True)
