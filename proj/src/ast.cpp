/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>

#include "svl/ast.hpp"

namespace svl {

std::string type_name(Type t) {
  switch (t) {
    case Type::Int: return "int";
    case Type::Bool: return "boolean";
    case Type::Frac: return "frac";
    case Type::Role: return "role";
    case Type::Resource: return "resource";
    case Type::Void: return "void";
    case Type::Cell: return "AtomicInteger";
    case Type::Unknown: break;
  }
  return "?";
}

ResourcePtr make_emp() { return std::make_shared<Resource>(); }

ResourcePtr make_star(ResourcePtr a, ResourcePtr b) {
  auto r = std::make_shared<Resource>();
  r->kind = Resource::Kind::Star;
  r->loc = a->loc;
  r->left = std::move(a);
  r->right = std::move(b);
  return r;
}

const PredicateDecl* ClassDecl::find_predicate(const std::string& n) const {
  for (const auto& p : predicates)
    if (p.name == n) return &p;
  return nullptr;
}

const FunctionDecl* ClassDecl::find_function(const std::string& n) const {
  for (const auto& f : functions)
    if (f.name == n) return &f;
  return nullptr;
}

const FieldDecl* ClassDecl::find_field(const std::string& n) const {
  for (const auto& f : fields)
    if (f.name == n) return &f;
  return nullptr;
}

const MethodDecl* ClassDecl::find_method(const std::string& n) const {
  for (const auto& m : methods)
    if (m.name == n) return &m;
  return nullptr;
}

const MethodDecl* ClassDecl::constructor() const {
  for (const auto& m : methods)
    if (m.constructor) return &m;
  return nullptr;
}

std::vector<std::string> ClassDecl::roles() const {
  std::vector<std::string> out{kSyncRole};
  for (const auto& rs : role_sets)
    for (const auto& r : rs.roles)
      if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  return out;
}

int ClassDecl::role_index(const std::string& n) const {
  auto rs = roles();
  auto it = std::find(rs.begin(), rs.end(), n);
  return it == rs.end() ? -1 : static_cast<int>(it - rs.begin());
}

const ClassDecl* Program::find_class(const std::string& n) const {
  for (const auto& c : classes)
    if (c.name == n) return &c;
  return nullptr;
}

}  // namespace svl
