"""Membership walkthrough: org roots, member identities, and non-repudiation.

Four organizations each hold a root signing pair. Members carry a root-signed
attestation; any party holding the trust set can verify who signed what, and
a single flipped byte anywhere in the chain breaks verification.
"""

from bladetrace.identity import Identity, MembershipService

membership = MembershipService()

for org in ("OEM", "AIRLINE", "MRO", "REGULATOR"):
    membership.create_org(org)
print("registered orgs:", ", ".join(membership.registered_orgs()))

mro_root = membership._org_secrets["MRO"]
inspector = membership.issue_identity(mro_root, "inspector1", "client")
print(f"issued {inspector.identity.msp_id}/{inspector.identity.common_name}")

message = b"inspection record for blade BLD-0001"
signature = inspector.sign(message)
print("signature verifies:", membership.verify(signature, message))
print("altered message verifies:", membership.verify(signature, message + b"!"))

# Tamper with the attestation: the identity falls out of the trust set.
ident = inspector.identity
broken = bytearray(ident.org_attestation)
broken[0] ^= 0x01
tampered = Identity(ident.msp_id, ident.common_name, ident.role, ident.public_key, bytes(broken))
print("tampered attestation trusted:", membership.verify_identity(tampered))

# An identity from an unregistered root is never trusted.
rogue_net = MembershipService()
rogue_root = rogue_net.create_org("ROGUE")
rogue = rogue_net.issue_identity(rogue_root, "intruder", "client")
print("identity from unregistered root trusted:", membership.verify_identity(rogue.identity))
