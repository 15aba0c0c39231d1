"""eigenlab: desk-scale verification lab for first Dirichlet eigenvalues.

Subpackages cover constant-curvature model balls (``model_space``), plane
domains with conformal metrics (``domain_mesh``), a P1 finite element
eigensolver (``eigensolver``), decreasing rearrangements and the associated
comparison inequalities (``rearrangement``), boundary flows with eigenvalue
monotonicity bounds (``flow_lab``), and conformal-image experiments
(``conformal_lab``).  The ``cli`` module ties everything into reproducible
verification suites.
"""

__version__ = "0.1.0"
