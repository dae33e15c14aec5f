// Measures the regression constants of the inequality suite on the
// calibration corpus and prints them with the frozen margins applied.
#include <cstdio>
#include <iostream>

#include "vortexldp/inequalities.hpp"

int main() {
    using namespace vortexldp;
    const nlohmann::json raw = calibrate_constants(calibration_corpus());
    std::cout << raw.dump(2) << "\n\n";
    // Ratio constants get 25% headroom; derived constants a small relative margin.
    std::printf("inline constexpr double C_K = %.6g;\n", raw["C_K"].get<double>() * 1.05);
    std::printf("inline constexpr double C_0 = %.6g;\n", raw["C_0"].get<double>() * 1.01);
    std::printf("inline constexpr double C_1 = %.6g;\n", raw["C_1"].get<double>() * 1.25);
    std::printf("inline constexpr double C_2 = %.6g;\n", raw["C_2"].get<double>() * 1.25);
    std::printf("inline constexpr double C_N = %.6g;\n", raw["C_N"].get<double>() * 1.01);
    std::printf("inline constexpr double C_energy = %.6g;\n", raw["C_energy"].get<double>() * 1.01);
    return 0;
}
