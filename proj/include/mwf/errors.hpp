#ifndef MWF_ERRORS_HPP
#define MWF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mwf {

/* Every failure mode gets its own type so callers can catch precisely and the
 * CLI can print a stable code name.  what() is prefixed with that name. */
struct Error : std::runtime_error {
    Error(const std::string& code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(code) {}
    const std::string& code() const { return code_; }

  private:
    std::string code_;
};

#define MWF_ERROR_TYPE(Name)                                                   \
    struct Name : Error {                                                      \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}           \
    }

MWF_ERROR_TYPE(ZeroInverse);
MWF_ERROR_TYPE(NonResidue);
MWF_ERROR_TYPE(RangeTooLarge);
MWF_ERROR_TYPE(CurveMismatch);
MWF_ERROR_TYPE(AmbiguousOrder);
MWF_ERROR_TYPE(BadFactorization);
MWF_ERROR_TYPE(ClosureBudgetExceeded);
MWF_ERROR_TYPE(SamplingExhausted);
MWF_ERROR_TYPE(NotTwoTorsion);
MWF_ERROR_TYPE(NotOddTorsion);
MWF_ERROR_TYPE(DomainMismatch);
MWF_ERROR_TYPE(NoIsomorphismFound);
MWF_ERROR_TYPE(EllDividesDegree);
MWF_ERROR_TYPE(IndexNotComputable);
MWF_ERROR_TYPE(EmptyOverlap);
MWF_ERROR_TYPE(EmptyWindow);
MWF_ERROR_TYPE(BadPrime);
MWF_ERROR_TYPE(SingularCurve);
MWF_ERROR_TYPE(PointNotOnCurve);
MWF_ERROR_TYPE(ParseError);
MWF_ERROR_TYPE(IndeterminateRank);

#undef MWF_ERROR_TYPE

} // namespace mwf

#endif
