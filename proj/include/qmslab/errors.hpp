#pragma once

#include <stdexcept>
#include <string>

namespace qmslab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define QMSLAB_ERROR(Name)           \
  struct Name : Error {              \
    using Error::Error;              \
  }

QMSLAB_ERROR(HermitianViolation);
QMSLAB_ERROR(DomainViolation);
QMSLAB_ERROR(ShapeError);
QMSLAB_ERROR(SupportError);
QMSLAB_ERROR(RankError);
QMSLAB_ERROR(NotModularEigenvector);
QMSLAB_ERROR(ModelError);
QMSLAB_ERROR(EvolutionError);
QMSLAB_ERROR(DegenerateSampling);
QMSLAB_ERROR(PrimitivityError);
QMSLAB_ERROR(IncompatibleStates);
QMSLAB_ERROR(HypothesisError);
QMSLAB_ERROR(DBCError);
QMSLAB_ERROR(DegeneracyError);
QMSLAB_ERROR(IrreducibilityError);
QMSLAB_ERROR(UnitarityError);
QMSLAB_ERROR(SubalgebraError);
QMSLAB_ERROR(ConfigError);

#undef QMSLAB_ERROR

}  // namespace qmslab
