# %% [markdown]
# # Private prediction end to end
#
# Exact privacy curve of the main learner on a small grid, then the
# subsampling amplification check.

# %%
import warnings

from stable_predict.classes import HypothesisClass
from stable_predict.experiments import amplification_demo
from stable_predict.private import MainConfig, privacy_certificate

warnings.simplefilter("ignore")

cfg = MainConfig(n_prime=2, eta=0.5, alpha=0.25, beta=0.25, eps=0.5, r=2, partition_size=2)
rep = privacy_certificate(cfg, HypothesisClass.thresholds(3), 4)
for d, e in list(zip(rep["frontier"]["delta"], rep["frontier"]["eps"]))[::200]:
    print(f"delta={d:.3f}  eps={e:.4f}")

# %%
amp = amplification_demo(0.5, 0.5, HypothesisClass.thresholds(4), 4)
print(f"subsampled eps {amp['measured_eps']:.4f} vs bound {amp['bound']}")
