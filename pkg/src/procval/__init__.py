"""Process-calculus workbench with lattice-valued performance evaluation.

Submodules: `lattice` (finite complete lattices), `fixpoint` (monotone maps
and equation solving), `proc` (the calculus and its transition systems),
`pel` (evaluation formulas and their semantics), `bisim` (bisimulation
checking), `encodings` (Turing machines and Petri nets), `synth`
(enumerative synthesis), `cli` (the command-line surface).
"""

__version__ = "0.1.0"
