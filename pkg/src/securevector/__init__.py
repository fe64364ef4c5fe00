"""Privacy-preserving vector matching with segment permutations and Paillier encryption."""
from .codec import CombinedSecret, CorruptToken, PermutationSecret
from .enroll import EnrolledRecord, ParamsMismatch, enroll
from .match import MatchResult, match_pair
from .paillier import KeyPair, keygen, seeded_rng, system_rng
from .params import InfeasibleParams, ParamSet, optimal_K
from .store import GalleryFile, gallery_topk

__version__ = "0.1.0"
