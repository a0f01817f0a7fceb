#ifndef CSKLAB_CSK_MODEM_HPP
#define CSKLAB_CSK_MODEM_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "csklab/chaos_maps.hpp"

namespace csk {

/// A block of +/-1 information symbols with its spreading parameters.
/// One chip occupies one sample (T_c = 1), so the rectangular chip pulse is
/// the identity.
struct SymbolFrame {
    std::vector<int> symbols;
    int beta = 1;
    double chip_period = 1.0;

    void validate() const {
        if (beta < 1) throw std::invalid_argument("SymbolFrame: beta must be >= 1");
        if (!(chip_period > 0.0)) throw std::invalid_argument("SymbolFrame: chip_period must be > 0");
        for (int s : symbols)
            if (s != 1 && s != -1) throw std::invalid_argument("SymbolFrame: symbols must be +/-1");
    }
};

/// CSK spreading: sample l*beta+k = s_l * x_{l*beta+k}.
inline std::vector<double> spread(const SymbolFrame& frame, const ChaoticSequence& chips) {
    frame.validate();
    if (chips.chips.size() != frame.symbols.size() * static_cast<std::size_t>(frame.beta))
        throw std::invalid_argument("spread: chip count != symbols * beta");
    std::vector<double> out(chips.chips.size());
    for (std::size_t l = 0; l < frame.symbols.size(); ++l) {
        const double s = static_cast<double>(frame.symbols[l]);
        const std::size_t base = l * static_cast<std::size_t>(frame.beta);
        for (int k = 0; k < frame.beta; ++k) out[base + k] = s * chips.chips[base + k];
    }
    return out;
}

/// Transmitted energy of symbol l: T_c * sum of squared chips in its block.
inline double bit_energy(const ChaoticSequence& chips, std::size_t symbol_index, int beta,
                         double chip_period = 1.0) {
    if (beta < 1) throw std::invalid_argument("bit_energy: beta must be >= 1");
    const std::size_t base = symbol_index * static_cast<std::size_t>(beta);
    if (base + static_cast<std::size_t>(beta) > chips.chips.size())
        throw std::out_of_range("bit_energy: symbol_index out of range");
    double e = 0.0;
    for (int k = 0; k < beta; ++k) {
        const double x = chips.chips[base + k];
        e += x * x;
    }
    return chip_period * e;
}

/// Correlate the combined signal against the replica chips and slice.
/// sign(0) := +1.
inline std::vector<int> despread_decide(std::span<const double> combined,
                                        const ChaoticSequence& chips, int beta) {
    if (beta < 1) throw std::invalid_argument("despread_decide: beta must be >= 1");
    if (combined.size() != chips.chips.size())
        throw std::invalid_argument("despread_decide: length mismatch");
    if (combined.size() % static_cast<std::size_t>(beta) != 0)
        throw std::invalid_argument("despread_decide: length not a multiple of beta");
    const std::size_t n_symbols = combined.size() / static_cast<std::size_t>(beta);
    std::vector<int> decisions(n_symbols);
    for (std::size_t l = 0; l < n_symbols; ++l) {
        double corr = 0.0;
        const std::size_t base = l * static_cast<std::size_t>(beta);
        for (int k = 0; k < beta; ++k) corr += combined[base + k] * chips.chips[base + k];
        decisions[l] = (corr < 0.0) ? -1 : 1;
    }
    return decisions;
}

}  // namespace csk

#endif  // CSKLAB_CSK_MODEM_HPP
