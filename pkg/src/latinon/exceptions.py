"""Error types raised by the toolkit.

Each error carries the CLI exit code it maps to: 3 for validation failures,
4 for budget guards.
"""


class LatinonError(ValueError):
    exit_code = 1


class ValidationError(LatinonError):
    exit_code = 3


class BudgetError(LatinonError):
    exit_code = 4


# latin squares
class NotSquare(ValidationError):
    pass


class ValueOutOfRange(ValidationError):
    def __init__(self, row, col, value=None):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"value {value!r} out of range at row {row}, column {col}")


class DuplicateInRow(ValidationError):
    def __init__(self, row, value):
        self.row, self.value = row, value
        super().__init__(f"value {value} repeated in row {row}")


class DuplicateInColumn(ValidationError):
    def __init__(self, col, value):
        self.col, self.value = col, value
        super().__init__(f"value {value} repeated in column {col}")


class OddOrder(ValidationError):
    pass


class NotDivisibleBy3(ValidationError):
    pass


# step latinons
class PartitionError(ValidationError):
    pass


class RowMarginalViolation(ValidationError):
    def __init__(self, i, k, residual):
        self.i, self.k, self.residual = i, k, residual
        super().__init__(f"row cell {i}, value cell {k}: marginal residual {residual:.3e}")


class ColMarginalViolation(ValidationError):
    def __init__(self, j, k, residual):
        self.j, self.k, self.residual = j, k, residual
        super().__init__(f"column cell {j}, value cell {k}: marginal residual {residual:.3e}")


class SumNotOne(ValidationError):
    def __init__(self, i, j, total=None):
        self.i, self.j, self.total = i, j, total
        super().__init__(f"distribution at cell ({i}, {j}) sums to {total}")


class PartitionMismatch(ValidationError):
    pass


# patterns
class DuplicateEntry(ValidationError):
    pass


class WitnessInvalid(ValidationError):
    pass


class TooFewRows(ValidationError):
    pass


# budgets
class BudgetExceeded(BudgetError):
    pass


class TooLarge(BudgetError):
    pass


class PatternTooLarge(BudgetError):
    pass


class TooManyCellsForExact(BudgetError):
    pass


class TooManyVertices(BudgetError):
    pass
