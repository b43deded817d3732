#include <fstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"

#include <rdelab.hpp>

using namespace rdelab;

namespace {

std::string data(const char* name) { return std::string(RDELAB_DATA_DIR) + "/" + name; }

json gm2_doc() { return instance_to_json(gm2()); }

}  // namespace

TEST(Instance, DataFilesMatchBuiltins) {
    for (const auto& [file, builtin] : {std::pair{"gm2.json", "gm2"}, {"full2.json", "full2"}, {"id2.json", "id2"}}) {
        const auto a = load_instance(data(file));
        const auto b = builtin_instance(builtin);
        EXPECT_EQ(a.bundle.alphabet(), b.bundle.alphabet());
        for (Fiber w = 0; w < b.bundle.omega_count(); ++w) EXPECT_EQ(a.bundle.adjacency(w), b.bundle.adjacency(w));
        for (const auto& [name, c] : b.covers) EXPECT_EQ(a.cover(name), c) << file << " " << name;
        for (const auto& [name, q] : b.transitions) EXPECT_EQ(a.transitions.at(name), q);
    }
}

TEST(Instance, RoundTrip) {
    const auto j = gm2_doc();
    const auto back = instance_from_json(j);
    EXPECT_EQ(instance_to_json(back).dump(), j.dump());
    const auto gen = gen_instance(42);
    EXPECT_EQ(instance_to_json(instance_from_json(instance_to_json(gen))).dump(), instance_to_json(gen).dump());
}

TEST(Instance, BrokenFileLoadsButFailsValidation) {
    const auto inst = load_instance(data("broken.json"));
    const auto d = validate(inst.bundle);
    ASSERT_FALSE(d.ok());
    EXPECT_NE(d.issues.front().find("row 'b'"), std::string::npos);
}

TEST(Instance, SchemaErrors) {
    auto j = gm2_doc();
    j["extra"] = 1;
    EXPECT_ERROR_KIND(instance_from_json(j), ErrorKind::schema);
    j = gm2_doc();
    j["adjacency"]["w0"] = json::array({json::array({1, 1})});
    EXPECT_ERROR_KIND(instance_from_json(j), ErrorKind::schema);
    j = gm2_doc();
    j["adjacency"].erase("w1");
    EXPECT_ERROR_KIND(instance_from_json(j), ErrorKind::schema);
    j = gm2_doc();
    j["covers"]["zero_cyl"]["product"] = json::array({json::array({"c"})});
    EXPECT_ERROR_KIND(instance_from_json(j), ErrorKind::schema);
    j = gm2_doc();
    j["theta"] = "swap";
    EXPECT_ERROR_KIND(instance_from_json(j), ErrorKind::schema);
    std::ofstream("bad_syntax.json") << "{ not json";
    EXPECT_ERROR_KIND(load_instance("bad_syntax.json"), ErrorKind::schema);
    EXPECT_ERROR_KIND(load_instance("missing_file.json"), ErrorKind::precondition);
}

TEST(Instance, UnknownNames) {
    const auto g = gm2();
    EXPECT_ERROR_KIND(g.cover("nope"), ErrorKind::unknown_name);
    EXPECT_ERROR_KIND(g.measure("nope"), ErrorKind::unknown_name);
    EXPECT_ERROR_KIND(builtin_instance("nope"), ErrorKind::unknown_name);
}

TEST(Instance, PerOmegaCover) {
    auto j = gm2_doc();
    j["covers"]["split"] = {{"window", 1}, {"per_omega", {{"w0", {{"a"}, {"b"}}}, {"w1", {{"a", "b"}, json::array()}}}}};
    const auto inst = instance_from_json(j);
    const auto& c = inst.cover("split");
    EXPECT_FALSE(c.product_form);
    EXPECT_TRUE(is_partition(c));
}
