#include "wam/core/param.hpp"

#include <cmath>

#include "wam/core/error.hpp"

namespace wam {

template <typename T>
void adam_step(const std::vector<ParamT<T>*>& params, double lr, double beta1, double beta2,
               double epsilon) {
    if (lr <= 0.0) throw Error("adam_step: learning rate must be positive");
    // Validate every gradient before touching any state, so a bad batch
    // aborts the whole step.
    for (const ParamT<T>* p : params)
        for (const T& g : p->grad.data)
            if (!std::isfinite(static_cast<double>(g)))
                throw Error("adam_step: non-finite gradient in parameter '" + p->name + "'");

    for (ParamT<T>* p : params) {
        p->step_count += 1;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p->step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p->step_count));
        for (std::int64_t i = 0; i < p->value.numel(); ++i) {
            const double g = static_cast<double>(p->grad[i]);
            const double m = beta1 * static_cast<double>(p->m[i]) + (1.0 - beta1) * g;
            const double v = beta2 * static_cast<double>(p->v[i]) + (1.0 - beta2) * g * g;
            p->m[i] = static_cast<T>(m);
            p->v[i] = static_cast<T>(v);
            const double step = lr * (m / bc1) / (std::sqrt(v / bc2) + epsilon);
            p->value[i] = static_cast<T>(static_cast<double>(p->value[i]) - step);
        }
        p->zero_grad();
    }
}

template void adam_step<float>(const std::vector<ParamT<float>*>&, double, double, double,
                               double);
template void adam_step<double>(const std::vector<ParamT<double>*>&, double, double, double,
                                double);

}  // namespace wam
