#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

namespace supplysim {

using Money = std::int64_t;  // integer currency units
using Units = std::int64_t;  // integer goods units
using Rational = boost::multiprecision::cpp_rational;
using ItemId = std::string;
using AgentId = std::string;

inline constexpr std::size_t kMaxSloganWords = 25;

// Thrown when an engine-level accounting invariant breaks. Always a bug.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ItemSpec {
  ItemId item_id;
  Money base_price{0};
  Units quantity{0};
  std::string category;

  bool operator==(const ItemSpec&) const = default;
};

using Catalog = std::vector<ItemSpec>;

// Sum of quantity * base_price over the catalog.
Money catalog_total_value(std::span<const ItemSpec> catalog);
Units catalog_total_units(std::span<const ItemSpec> catalog);
const ItemSpec* find_item(std::span<const ItemSpec> catalog, std::string_view item_id);
// Throws std::invalid_argument on negative fields, empty or duplicate ids.
void validate_catalog(std::span<const ItemSpec> catalog);

struct AgentState {
  AgentId agent_id;
  Money funds{0};
  std::map<ItemId, Units> inventory;
  // Weighted-average procurement cost per unit, present once an item was procured.
  std::map<ItemId, Rational> unit_cost;
  bool bankrupt{false};

  Units units(std::string_view item_id) const;
  Units total_inventory() const;

  bool operator==(const AgentState&) const = default;
};

struct BidLine {
  Units qty{0};
  Money price{0};

  bool operator==(const BidLine&) const = default;
};

struct Bid {
  std::map<ItemId, BidLine> lines;

  // Saturates at INT64_MAX instead of overflowing.
  Money total_cost() const;
  Units total_qty() const;
  bool empty() const { return lines.empty(); }

  bool operator==(const Bid&) const = default;
};

struct Award {
  Units qty{0};
  Money unit_price{0};

  bool operator==(const Award&) const = default;
};

struct Allocation {
  std::map<std::pair<AgentId, ItemId>, Award> awards;

  Units units_awarded(std::string_view item_id) const;
  Money cost_for(std::string_view agent_id) const;
  Money total_cost() const;
  bool empty() const { return awards.empty(); }

  bool operator==(const Allocation&) const = default;
};

struct RetailPosting {
  std::map<ItemId, Money> prices;
  std::string slogan;

  bool empty() const { return prices.empty(); }
  bool operator==(const RetailPosting&) const = default;
};

// Keeps at most max_words whitespace-separated words, cutting at the end of
// the last kept word. Shorter slogans are returned verbatim.
std::string truncate_slogan(std::string_view slogan, std::size_t max_words = kMaxSloganWords);

struct Demand {
  ItemId item_id;
  Units qty{0};

  bool operator==(const Demand&) const = default;
};

struct BuyerPersona {
  std::string buyer_id;
  std::string tribe;
  std::string persona_text;
  double lambda{0.0};
  double rho{0.0};
  Demand demand;

  bool operator==(const BuyerPersona&) const = default;
};

struct PurchaseEvent {
  int step{0};
  std::string buyer_id;
  AgentId seller_id;
  ItemId item_id;
  Units qty{0};
  Money unit_price{0};

  bool operator==(const PurchaseEvent&) const = default;
};

struct StockoutAttempt {
  int step{0};
  std::string buyer_id;
  AgentId seller_id;
  ItemId item_id;
  Units units_unfilled{0};

  bool operator==(const StockoutAttempt&) const = default;
};

class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  // Throws std::invalid_argument on non-finite components.
  explicit EmbeddingVector(std::vector<double> components);

  std::size_t dim() const { return components_.size(); }
  std::span<const double> components() const { return components_; }
  double norm() const;
  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> components_;
};

std::string rational_to_string(const Rational& r);
Rational rational_from_string(const std::string& s);
double to_double(const Rational& r);

void to_json(nlohmann::json& j, const ItemSpec& v);
void from_json(const nlohmann::json& j, ItemSpec& v);
void to_json(nlohmann::json& j, const AgentState& v);
void from_json(const nlohmann::json& j, AgentState& v);
void to_json(nlohmann::json& j, const BidLine& v);
void from_json(const nlohmann::json& j, BidLine& v);
void to_json(nlohmann::json& j, const Bid& v);
void from_json(const nlohmann::json& j, Bid& v);
void to_json(nlohmann::json& j, const Allocation& v);
void from_json(const nlohmann::json& j, Allocation& v);
void to_json(nlohmann::json& j, const RetailPosting& v);
void from_json(const nlohmann::json& j, RetailPosting& v);
void to_json(nlohmann::json& j, const Demand& v);
void from_json(const nlohmann::json& j, Demand& v);
void to_json(nlohmann::json& j, const BuyerPersona& v);
void from_json(const nlohmann::json& j, BuyerPersona& v);
void to_json(nlohmann::json& j, const PurchaseEvent& v);
void from_json(const nlohmann::json& j, PurchaseEvent& v);
void to_json(nlohmann::json& j, const StockoutAttempt& v);
void from_json(const nlohmann::json& j, StockoutAttempt& v);
void to_json(nlohmann::json& j, const EmbeddingVector& v);
void from_json(const nlohmann::json& j, EmbeddingVector& v);

}  // namespace supplysim
