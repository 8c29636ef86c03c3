#pragma once

#include <stdexcept>
#include <string>

namespace dtfl {

// A constraint that cannot be met (deadline, bounds, empty feasible set).
// Carries the offending client where one is known; client_id < 0 means the
// failure is not attributable to a single client.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(std::string constraint, int client_id = -1)
        : std::runtime_error(client_id >= 0
                                 ? "infeasible (client " + std::to_string(client_id) +
                                       "): " + constraint
                                 : "infeasible: " + constraint),
          constraint_(std::move(constraint)),
          client_id_(client_id) {}

    const std::string& constraint() const noexcept { return constraint_; }
    int client_id() const noexcept { return client_id_; }

private:
    std::string constraint_;
    int client_id_;
};

// An iterative solver ran out of its iteration budget. The message carries
// enough of the iterate history to diagnose the instance.
class NonConvergenceError : public std::runtime_error {
public:
    explicit NonConvergenceError(const std::string& detail)
        : std::runtime_error("did not converge: " + detail) {}
};

}  // namespace dtfl
