from .canon import canonical_smiles
from .filters import FILTER_LABEL, molecular_weight, passes_filters
from .fingerprint import Fingerprint, WidthMismatch, fingerprint, tanimoto, tanimoto_matrix
from .molecule import (
    AromaticityError,
    Atom,
    Bond,
    BondOrder,
    Molecule,
    SmilesError,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnclosedRing,
    UnknownElement,
    ValenceViolation,
)
from .smiles import is_valid, parse_smiles


def canonicalize(smiles):
    """Canonical form of a SMILES string (raises SmilesError if invalid)."""
    return canonical_smiles(parse_smiles(smiles))
