#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>

#include <json.hpp>

#include "rmdp/ambiguity.hpp"
#include "rmdp/inventory.hpp"
#include "rmdp/tabular.hpp"

namespace rmdp {

using Json = nlohmann::json;

// Instance file: {"format": "rmdp-instance", "version": 1, "problem": ...,
// "mdp": {...}, "ambiguity": {...}, "inventory": {...}}. Kernel and cost rows
// are listed in s*A + a order. docs/FORMATS.md has the full schema.
inline constexpr const char* kInstanceFormat = "rmdp-instance";
inline constexpr int kInstanceVersion = 1;

Json mdp_to_json(const TabularRmdp& mdp);
TabularRmdp mdp_from_json(const Json& j);

Json spec_to_json(const InventorySpec& spec);
InventorySpec spec_from_json(const Json& j);

struct Instance {
  std::string problem;  // "garnet" or "inventory"
  std::shared_ptr<const TabularRmdp> mdp;
  std::shared_ptr<const InventoryModel> inventory;  // null for garnet
  AmbiguitySet set;
};

Instance make_garnet_instance(TabularRmdp mdp, AmbiguitySet set);
Instance make_inventory_instance(InventoryModel model);

Json instance_to_json(const Instance& instance);
Instance instance_from_json(const Json& j);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

// Policy file: {"policy": [[...], ...]} (S rows of A probabilities) or
// {"w": [...]} (softmax weights for the inventory model).
Policy policy_from_json(const Json& j, const Instance& instance);

// 64-bit FNV-1a, used to fingerprint serialized instances.
std::uint64_t fnv1a64(std::string_view bytes);

Json read_json_file(const std::filesystem::path& path);

}  // namespace rmdp
