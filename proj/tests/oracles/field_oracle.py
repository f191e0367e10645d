#!/usr/bin/env python3
# Copyright 2026 The postsel Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""50-digit reference values for the field-dynamics fixtures.

Independent of the C++ code: plain mpmath matrices built from the
crystal equations. Output is pasted into tests/field_test.cpp.
"""
import mpmath as mp

mp.mp.dps = 50
I = mp.mpc(0, 1)


def crystal(s, pc, g):
    return (s * mp.cosh(g) + I * pc * mp.sinh(g),
            pc * mp.cosh(g) - I * s * mp.sinh(g))


def gain(g):
    c, s = mp.cosh(g), mp.sinh(g)
    m = mp.zeros(4, 4)
    for o in (0, 2):
        m[o, o], m[o, o + 1] = c, I * s
        m[o + 1, o], m[o + 1, o + 1] = -I * s, c
    return m


def interchange(a, b):
    m = mp.zeros(4, 4)
    m[0, 0] = mp.exp(I * a)
    m[1, 3] = 1
    m[2, 2] = mp.exp(I * b)
    m[3, 1] = 1
    return m


def seed(deltas):
    return mp.matrix([mp.sqrt(mp.mpf("0.5")) * mp.exp(I * d) for d in deltas])


def show(label, v):
    print(label)
    for k in range(len(v)):
        z = v[k]
        print("  {%s, %s}  |.|=%s" % (mp.nstr(z.real, 20), mp.nstr(z.imag, 20),
                                     mp.nstr(abs(z), 20)))


h = mp.sqrt(mp.mpf("0.5"))
so, po = crystal(h, h, mp.mpf("0.25"))
show("crystal(sqrt.5, sqrt.5, 0.25)", [so, po])
print("cosh(0.25) =", mp.nstr(mp.cosh(mp.mpf("0.25")), 20))
print("sinh(0.25) =", mp.nstr(mp.sinh(mp.mpf("0.25")), 20))

g = mp.mpf("0.25")
out = gain(g) * interchange(0, 0) * gain(g) * seed([0, 0, 0, 0])
show("propagate delta=0 g=0.25 a=b=0", out)

d = [mp.mpf("0.3"), mp.mpf("1.1"), mp.mpf("2.5"), mp.mpf("4.0")]
out = gain(g) * interchange(mp.mpf("0.7"), mp.mpf("2.1")) * gain(g) * seed(d)
show("propagate delta=(0.3,1.1,2.5,4.0) g=0.25 a=0.7 b=2.1", out)

print("max output magnitude bound sqrt(.5)*exp(2g) at g=0.25 =",
      mp.nstr(h * mp.exp(2 * g), 20))
