#include <gtest/gtest.h>

#include "nosqlab/value.hpp"

using namespace nosqlab;

TEST(Value, KindsAndAccessors) {
  EXPECT_TRUE(Value().is_null());
  EXPECT_EQ(Value(7).as_int(), 7);
  EXPECT_EQ(Value(2.5).as_number(), 2.5);
  EXPECT_EQ(Value("x").as_text(), "x");
  EXPECT_THROW(Value("x").as_int(), TypeError);
  EXPECT_THROW(Value(1).as_object(), TypeError);
}

TEST(Value, StrictEquality) {
  EXPECT_NE(Value(1), Value(1.0));
  EXPECT_NE(Value(1), Value("1"));
  EXPECT_EQ(Value(Object{{"a", 1}}), Value(Object{{"a", 1}}));
  EXPECT_NE(Value(Object{{"a", 1}, {"b", 2}}), Value(Object{{"b", 2}, {"a", 1}}));
}

TEST(Value, ObjectSetKeepsFirstPosition) {
  Object o{{"a", 1}, {"b", 2}};
  o.set("a", 3);
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(o.entries()[0].first, "a");
  EXPECT_EQ(*o.find("a"), Value(3));
  EXPECT_TRUE(o.erase("a"));
  EXPECT_FALSE(o.contains("a"));
}

TEST(Value, CanonicalJson) {
  const Value v(Object{{"title", "The Hobbit"}, {"n", 1}, {"f", 1.5}, {"w", 2.0}, {"ok", true},
                       {"none", nullptr}, {"list", Array{1, "two"}}});
  EXPECT_EQ(to_json(v), R"({"title":"The Hobbit","n":1,"f":1.5,"w":2.0,"ok":true,"none":null,"list":[1,"two"]})");
  EXPECT_EQ(to_json(Value("q\"\\\n\x01")), R"("q\"\\\n\u0001")");
}

TEST(Value, JsonRoundTrip) {
  const std::string text = R"({"a":[1,2.25,"x",{"b":null}],"c":false,"d":-9223372036854775808})";
  EXPECT_EQ(to_json(parse_json(text)), text);
  EXPECT_THROW(parse_json("1e400"), JsonError);  // overflow is rejected, not inf
  EXPECT_EQ(parse_json("18446744073709551616").kind(), ValueKind::Float);
}

TEST(Value, JsonDuplicateKeysLastWins) { EXPECT_EQ(parse_json(R"({"a":1,"a":2})"), Value(Object{{"a", 2}})); }

TEST(Value, JsonErrors) {
  EXPECT_THROW(parse_json("{"), JsonError);
  EXPECT_THROW(parse_json("{'a':1}"), JsonError);
  EXPECT_THROW(parse_json(std::string(600, '[') + std::string(600, ']')), JsonError);
}

TEST(Value, ScalarTextAndNodeCount) {
  EXPECT_EQ(scalar_text(Value(42)), "42");
  EXPECT_EQ(scalar_text(Value(true)), "true");
  EXPECT_EQ(scalar_text(Value(2.5)), "2.5");
  EXPECT_EQ(node_count(Value(Object{{"a", Array{1, 2}}})), 4u);
}
