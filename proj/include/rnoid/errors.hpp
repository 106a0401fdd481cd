#pragma once

#include <stdexcept>
#include <string>

namespace rnoid {

// Every error carries a module-qualified code such as "solver.NoConvergence".
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string name, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)), name_(std::move(name)) {}

    const std::string& module() const { return module_; }
    const std::string& name() const { return name_; }
    std::string code() const { return module_ + "." + name_; }

private:
    std::string module_;
    std::string name_;
};

#define RNOID_DEFINE_ERROR(Module, Name)                                           \
    class Name : public ::rnoid::Error {                                           \
    public:                                                                        \
        explicit Name(const std::string& what) : ::rnoid::Error(Module, #Name, what) {} \
    };

namespace polygon_errors {
RNOID_DEFINE_ERROR("polygon", ClosureViolation)
RNOID_DEFINE_ERROR("polygon", DegenerateEdge)
RNOID_DEFINE_ERROR("polygon", InvalidStar)
RNOID_DEFINE_ERROR("polygon", TooFewEdges)
}

namespace domain_errors {
RNOID_DEFINE_ERROR("domain", PunctureTooClose)
RNOID_DEFINE_ERROR("domain", CutCrossesBoundary)
RNOID_DEFINE_ERROR("domain", NotConvex)
RNOID_DEFINE_ERROR("domain", MeshFailure)
RNOID_DEFINE_ERROR("domain", InvalidStrip)
}

namespace solver_errors {
RNOID_DEFINE_ERROR("solver", DimensionMismatch)
RNOID_DEFINE_ERROR("solver", NoConvergence)
RNOID_DEFINE_ERROR("solver", JumpDegenerate)
RNOID_DEFINE_ERROR("solver", NonCauchy)
RNOID_DEFINE_ERROR("solver", InvalidData)
}

namespace conjugate_errors {
RNOID_DEFINE_ERROR("conjugate", DimensionMismatch)
RNOID_DEFINE_ERROR("conjugate", UnknownForm)
RNOID_DEFINE_ERROR("conjugate", NotSimplyConnected)
RNOID_DEFINE_ERROR("conjugate", PathNotInMesh)
RNOID_DEFINE_ERROR("conjugate", NoLoop)
RNOID_DEFINE_ERROR("conjugate", PeriodNotClosed)
RNOID_DEFINE_ERROR("conjugate", WeldGap)
}

namespace period_errors {
RNOID_DEFINE_ERROR("period", CurveExtractionFailed)
RNOID_DEFINE_ERROR("period", InsetTooLarge)
RNOID_DEFINE_ERROR("period", TooFewSamples)
RNOID_DEFINE_ERROR("period", ZeroOnLoop)
RNOID_DEFINE_ERROR("period", Undersampled)
RNOID_DEFINE_ERROR("period", NoZeroFound)
RNOID_DEFINE_ERROR("period", SymmetryViolation)
RNOID_DEFINE_ERROR("period", NotStrictlyConvex)
}

namespace validate_errors {
RNOID_DEFINE_ERROR("validate", MissingEndMetadata)
RNOID_DEFINE_ERROR("validate", OpenSurface)
}

namespace app_errors {
RNOID_DEFINE_ERROR("app", ConfigError)
RNOID_DEFINE_ERROR("app", IoError)
}

#undef RNOID_DEFINE_ERROR

} // namespace rnoid
