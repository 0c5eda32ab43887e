#include "thal/synth.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "thal/rng.hpp"

namespace thal::synth {

std::string generate_csv(std::size_t rows, std::uint64_t seed, double carrier_fraction) {
    if (rows < 4) throw std::invalid_argument("need at least 4 rows");
    auto rng = make_stream(seed, 0xda7aULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Blood-count style indices; carriers shift mcv/mch/rbc/hba2 noticeably,
    // a few indices mildly, the rest are noise.
    const std::vector<std::string> names = {
        "sex",  "age",  "hb",   "pcv",  "rbc",  "mcv",  "mch",  "mchc",
        "rdw",  "wbc",  "plt",  "hba",  "hba2", "hbf",  "ferritin"};
    struct Param {
        double base, sd, shift;
    };
    const std::vector<Param> params = {
        {0, 0, 0},          // sex, handled separately
        {30.0, 12.0, 0.0},  {13.5, 1.4, -1.6}, {41.0, 4.0, -3.2}, {4.8, 0.5, 0.9},
        {88.0, 5.0, -14.0}, {29.5, 2.0, -5.5}, {33.5, 1.2, -1.0}, {13.5, 1.2, 1.8},
        {7.5, 1.8, 0.0},    {260.0, 60.0, 0.0}, {96.5, 1.2, -2.0}, {2.6, 0.4, 1.9},
        {0.8, 0.4, 0.6},    {90.0, 45.0, 0.0}};

    std::size_t carriers = static_cast<std::size_t>(carrier_fraction * rows + 0.5);
    std::ostringstream out;
    for (std::size_t j = 0; j < names.size(); ++j) out << names[j] << ",";
    out << "phenotype\n";
    out.setf(std::ios::fixed);
    out.precision(3);
    for (std::size_t i = 0; i < rows; ++i) {
        bool carrier = i < carriers;
        out << (unit(rng) < 0.52 ? "female" : "male") << ",";
        for (std::size_t j = 1; j < params.size(); ++j) {
            const auto& p = params[j];
            double v = p.base + (carrier ? p.shift : 0.0) + p.sd * gauss(rng);
            out << v << ",";
        }
        out << (carrier ? "carrier" : "normal") << "\n";
    }
    return out.str();
}

void write_csv(const std::string& path, std::size_t rows, std::uint64_t seed,
               double carrier_fraction) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write dataset to '" + path + "'");
    f << generate_csv(rows, seed, carrier_fraction);
    if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

}  // namespace thal::synth
