#ifndef MEMDP_ERRORS_HPP
#define MEMDP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace memdp {

// Every error carries a stable machine-readable code so the CLI can surface
// it in JSON without string matching.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class ModelError : public Error {
public:
    using Error::Error;
};

struct DistributionNotNormalized : ModelError {
    DistributionNotNormalized(const std::string& env, const std::string& state,
                              const std::string& action)
        : ModelError("DistributionNotNormalized",
                     "distribution for (" + env + ", " + state + ", " + action +
                         ") does not sum to 1") {}
};

struct EmptyActionSet : ModelError {
    explicit EmptyActionSet(const std::string& state)
        : ModelError("EmptyActionSet", "state " + state + " has an empty action set") {}
};

struct UnknownState : ModelError {
    explicit UnknownState(const std::string& name)
        : ModelError("UnknownState", "unknown state: " + name) {}
};

struct UnknownAction : ModelError {
    explicit UnknownAction(const std::string& name)
        : ModelError("UnknownAction", "unknown action: " + name) {}
};

struct MissingTransition : ModelError {
    MissingTransition(const std::string& env, const std::string& state,
                      const std::string& action)
        : ModelError("MissingTransition", "missing transition for (" + env + ", " + state +
                                              ", " + action + ")") {}
};

struct NegativeProbability : ModelError {
    NegativeProbability(const std::string& env, const std::string& state,
                        const std::string& action)
        : ModelError("NegativeProbability", "negative probability in (" + env + ", " + state +
                                                ", " + action + ")") {}
};

struct ReservedStateName : ModelError {
    explicit ReservedStateName(const std::string& name)
        : ModelError("ReservedStateName", "state name is reserved: " + name) {}
};

struct MalformedModel : ModelError {
    explicit MalformedModel(const std::string& what) : ModelError("MalformedModel", what) {}
};

struct NotClosed : ModelError {
    explicit NotClosed(const std::string& state)
        : ModelError("NotClosed", "state " + state +
                                      " has no action whose support stays in the given set") {}
};

struct RevealedFormRequired : ModelError {
    explicit RevealedFormRequired(const std::string& what)
        : ModelError("RevealedFormRequired", what) {}
};

struct NoDistinguishingTransition : ModelError {
    NoDistinguishingTransition()
        : ModelError("NoDistinguishingTransition",
                     "all environments have identical transition probabilities") {}
};

class BudgetError : public Error {
public:
    using Error::Error;
};

struct MemoryBudgetExceeded : BudgetError {
    explicit MemoryBudgetExceeded(std::size_t limit)
        : BudgetError("MemoryBudgetExceeded",
                      "strategy memory exceeds the configured cap of " + std::to_string(limit)),
          limit(limit) {}
    std::size_t limit;
};

struct NotLimitSureWinning : Error {
    explicit NotLimitSureWinning(const std::string& state)
        : Error("NotLimitSureWinning", "state " + state + " is not limit-sure winning") {}
};

struct SingularSystem : Error {
    SingularSystem()
        : Error("SingularSystem",
                "linear system is singular; the supplied zero-probability sets are wrong") {}
};

}  // namespace memdp

#endif
