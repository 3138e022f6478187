#include "nosqlab/form_decoder.hpp"

#include <charconv>
#include <limits>
#include <memory>
#include <optional>
#include <unordered_map>

namespace nosqlab::form {

namespace {

// Mirror of a PHP array: ordered entries with integer or string keys.
struct PhpKey {
  bool is_int = false;
  std::int64_t number = 0;
  std::string text;

  std::string index_key() const { return is_int ? "i" + std::to_string(number) : "s" + text; }
  std::string display() const { return is_int ? std::to_string(number) : text; }
};

struct PhpArray;

struct PhpValue {
  std::string scalar;
  std::unique_ptr<PhpArray> array;  // set iff this is an array

  bool is_array() const { return array != nullptr; }
};

struct PhpArray {
  std::vector<std::pair<PhpKey, PhpValue>> entries;
  std::unordered_map<std::string, std::size_t> index;
  std::optional<std::int64_t> next_free;  // unset until an integer key lands

  PhpValue* find(const PhpKey& key) {
    auto it = index.find(key.index_key());
    return it == index.end() ? nullptr : &entries[it->second].second;
  }

  PhpValue& insert(PhpKey key, PhpValue value) {
    if (key.is_int && (!next_free || key.number >= *next_free))
      next_free = key.number < std::numeric_limits<std::int64_t>::max() ? key.number + 1 : key.number;
    index.emplace(key.index_key(), entries.size());
    entries.emplace_back(std::move(key), std::move(value));
    return entries.back().second;
  }

  // zend_symtable_update: overwrite in place or insert at the end.
  PhpValue& update(PhpKey key, PhpValue value) {
    if (PhpValue* existing = find(key)) {
      *existing = std::move(value);
      return *existing;
    }
    return insert(std::move(key), std::move(value));
  }

  // zend_hash_next_index_insert: fails when the next slot is taken.
  PhpValue* append(PhpValue value) {
    PhpKey key;
    key.is_int = true;
    key.number = next_free.value_or(0);
    if (find(key) != nullptr) return nullptr;
    return &insert(std::move(key), std::move(value));
  }

  void erase(const PhpKey& key) {
    auto it = index.find(key.index_key());
    if (it == index.end()) return;
    entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(it->second));
    index.clear();
    for (std::size_t i = 0; i < entries.size(); ++i) index.emplace(entries[i].first.index_key(), i);
  }
};

PhpValue new_array() {
  PhpValue v;
  v.array = std::make_unique<PhpArray>();
  return v;
}

// ZEND_HANDLE_NUMERIC_STR: "0" or -?[1-9][0-9]* within int64 range.
PhpKey symtable_key(std::string_view s) {
  PhpKey key;
  key.text = std::string(s);
  std::string_view digits = s;
  if (!digits.empty() && digits.front() == '-') digits.remove_prefix(1);
  if (digits.empty() || digits.size() > 19) return key;
  for (char c : digits)
    if (c < '0' || c > '9') return key;
  if (digits.front() == '0' && (digits.size() > 1 || s.front() == '-')) return key;
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size()) return key;
  key.is_int = true;
  key.number = n;
  return key;
}

std::string mangle(std::string_view s, bool brackets) {
  std::string out(s);
  for (char& c : out)
    if (c == ' ' || c == '.' || (brackets && c == '[')) c = '_';
  return out;
}

bool is_list_shaped(const PhpArray& arr) {
  std::int64_t expected = 0;
  for (const auto& [key, value] : arr.entries) {
    if (!key.is_int || key.number != expected) return false;
    ++expected;
  }
  return true;
}

FormTree to_tree(const PhpValue& v) {
  if (!v.is_array()) return FormTree{v.scalar};
  if (is_list_shaped(*v.array) && !v.array->entries.empty()) {
    FormTree::List list;
    for (const auto& [key, child] : v.array->entries) list.push_back(to_tree(child));
    return FormTree{std::move(list)};
  }
  FormTree::Map map;
  for (const auto& [key, child] : v.array->entries) map.emplace_back(key.display(), to_tree(child));
  return FormTree{std::move(map)};
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void register_variable(PhpArray& top, std::string_view raw_key, std::string value) {
  KeyPath path;
  try {
    path = parse_key_path(raw_key);
  } catch (const DecodeError&) {
    return;
  }
  const PhpKey root = symtable_key(path.root);
  if (path.bracket_levels > kMaxNestingLevel) {
    top.erase(root);
    return;
  }
  std::vector<Segment> steps;
  steps.reserve(path.segments.size() + 1);
  steps.emplace_back(Named{path.root});
  for (auto& seg : path.segments) steps.push_back(std::move(seg));

  // descend, creating arrays; the last step takes the scalar
  PhpArray* current = &top;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    PhpValue* slot = nullptr;
    if (std::holds_alternative<Append>(steps[i])) {
      slot = current->append(new_array());
      if (slot == nullptr) return;
    } else {
      const PhpKey key = symtable_key(std::get<Named>(steps[i]).key);
      slot = current->find(key);
      if (slot == nullptr) {
        slot = &current->insert(key, new_array());
      } else if (!slot->is_array()) {
        *slot = new_array();
      }
    }
    current = slot->array.get();
  }

  PhpValue leaf{std::move(value), nullptr};
  if (std::holds_alternative<Append>(steps.back())) {
    current->append(std::move(leaf));
  } else {
    current->update(symtable_key(std::get<Named>(steps.back()).key), std::move(leaf));
  }
}

}  // namespace

const FormTree* FormTree::find(std::string_view key) const {
  if (!is_map()) return nullptr;
  for (const auto& [k, v] : map())
    if (k == key) return &v;
  return nullptr;
}

KeyPath parse_key_path(std::string_view raw_key) {
  // PHP reads the name as a C string
  if (auto nul = raw_key.find('\0'); nul != std::string_view::npos) raw_key = raw_key.substr(0, nul);
  while (!raw_key.empty() && raw_key.front() == ' ') raw_key.remove_prefix(1);
  if (raw_key.empty()) throw DecodeError("empty key");

  KeyPath path;
  const std::size_t open = raw_key.find('[');
  path.root = mangle(raw_key.substr(0, open), false);
  if (open == std::string_view::npos) return path;
  if (open == 0) throw DecodeError("empty key");

  std::size_t pos = open;
  while (pos < raw_key.size() && raw_key[pos] == '[') {
    ++path.bracket_levels;
    const std::size_t start = pos + 1;
    const std::size_t close = raw_key.find(']', start);
    if (close == std::string_view::npos) {
      if (path.bracket_levels == 1) {
        // not an index after all: "a[b" registers as "a_b"
        path.root += '_';
        path.root += mangle(raw_key.substr(start), true);
      }
      break;
    }
    if (close == start) {
      path.segments.emplace_back(Append{});
    } else {
      path.segments.emplace_back(Named{std::string(raw_key.substr(start, close - start))});
    }
    pos = close + 1;
  }
  return path;
}

std::string percent_decode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '+') {
      out += ' ';
    } else if (c == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 && hex_value(text[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
      i += 2;
    } else {
      out += c;
    }
  }
  return out;
}

std::string percent_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size() * 3);
  for (unsigned char c : text) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                            c == '-' || c == '.' || c == '_' || c == '~';
    if (unreserved) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

FormTree decode_form(std::string_view body) {
  PhpArray top;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t amp = body.find('&', pos);
    if (amp == std::string_view::npos) amp = body.size();
    std::string_view pair = body.substr(pos, amp - pos);
    pos = amp + 1;
    if (pair.empty()) continue;
    const std::size_t eq = pair.find('=');
    std::string key = percent_decode(pair.substr(0, eq));
    std::string value = eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));
    register_variable(top, key, std::move(value));
  }

  FormTree::Map root;
  for (const auto& [key, child] : top.entries) root.emplace_back(key.display(), to_tree(child));
  return FormTree{std::move(root)};
}

Value form_to_value(const FormTree& tree) {
  if (tree.is_leaf()) return Value(tree.leaf());
  if (tree.is_list()) {
    Array out;
    out.reserve(tree.list().size());
    for (const auto& child : tree.list()) out.push_back(form_to_value(child));
    return Value(std::move(out));
  }
  Object out;
  for (const auto& [key, child] : tree.map()) out.set(key, form_to_value(child));
  return Value(std::move(out));
}

std::size_t node_count(const FormTree& tree) {
  std::size_t n = 1;
  if (tree.is_map())
    for (const auto& [key, child] : tree.map()) n += node_count(child);
  else if (tree.is_list())
    for (const auto& child : tree.list()) n += node_count(child);
  return n;
}

}  // namespace nosqlab::form
