#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "supplysim/rng.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// One buyer archetype. persona_template may contain a "{keywords}" slot.
struct TribeSpec {
  std::string name;
  double weight{0.0};
  double lambda{0.0};
  std::optional<double> rho;  // overrides the episode-wide patience when set
  std::vector<std::string> keywords;
  std::string persona_template;

  bool operator==(const TribeSpec&) const = default;
};

// Thrifty 0.4/0.2, Ethical 0.3/0.8, Hype 0.2/0.9, Quality 0.1/0.5.
std::vector<TribeSpec> default_tribes();

// Throws ConfigError unless weights are in [0,1] and sum to 1 within 1e-9,
// lambdas are >= 0, names are unique, and rho overrides lie in [0,1].
void validate_tribes(std::span<const TribeSpec> tribes);

std::string render_persona(const TribeSpec& tribe);

// Draws k buyers i.i.d. over tribes by weight. Demand is left empty; ids are
// id_prefix followed by the buyer's index.
std::vector<BuyerPersona> sample_buyers(std::size_t k, std::span<const TribeSpec> tribes, double rho_default, Rng& rng,
                                        std::string_view id_prefix = "b");

// round(ratio * total supply of offers)
Units total_demand(std::span<const ItemSpec> offers, double ratio);

// Gives each buyer one (item, qty) pair so that the total equals
// total_demand(offers, ratio) exactly. Items are drawn per buyer in
// proportion to supply; units are split over buyers multinomially. Buyers
// left without units are topped up to 1 from the largest holder while enough
// units exist, otherwise dropped.
std::vector<BuyerPersona> allocate_demand(std::vector<BuyerPersona> buyers, std::span<const ItemSpec> offers,
                                          double ratio, Rng& rng);

void to_json(nlohmann::json& j, const TribeSpec& v);
void from_json(const nlohmann::json& j, TribeSpec& v);

}  // namespace supplysim
