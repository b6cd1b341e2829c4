'''
Failure types raised across the acex package.

Each class derives from the builtin that the rest of the code base would otherwise
raise for the same situation, so ``except ValueError`` / ``except RuntimeError``
keep working for callers that do not care about the finer distinction.
'''


class ConfigValidationError(ValueError):
    '''A configuration field failed validation.'''

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class GeometryOverlapError(ValueError):
    '''Die fillets intersect an opposing wall or do not fit the channels.'''


class MeshSizeError(ValueError):
    '''The requested element size cannot resolve the billet.'''


class EmptyMaterialLineError(ValueError):
    '''A material line was requested between two coincident points.'''


class InvertedElementError(RuntimeError):
    '''One or more elements have a non-positive Jacobian.'''

    def __init__(self, element_ids, where="current"):
        self.element_ids = [int(e) for e in element_ids]
        self.where = where
        preview = ", ".join(str(e) for e in self.element_ids[:10])
        super().__init__(
            f"Non-positive Jacobian in {len(self.element_ids)} element(s) "
            f"({where} configuration): {preview}"
        )


class PhaseTransitionError(RuntimeError):
    '''Boundary nodes are outside the region the active load phase expects.'''


class SingularTangentError(RuntimeError):
    '''The reduced tangent could not be factorized.'''

    def __init__(self, dof, detail=""):
        self.dof = None if dof is None else int(dof)
        msg = f"Singular tangent near DOF {self.dof}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SolverFailure(RuntimeError):
    '''An increment could not be converged within the allowed step cuts.'''

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class DegenerateSectionError(ValueError):
    '''A section line does not cross the whole billet thickness.'''


class InsufficientSectionsError(ValueError):
    '''Too few sections are available for a spectral analysis.'''


class EmptyWindowError(ValueError):
    '''No surface node lies inside the contact observation window.'''


class MismatchedGeometryError(ValueError):
    '''Runs being compared do not share the same billet geometry.'''
