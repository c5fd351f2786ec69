#!/usr/bin/env python3
"""Build the character-trigram language profiles shipped in gatewatch/data.

The seed corpora below are short hand-written texts in each Latin-script
language the statistical fallback must separate (non-Latin scripts are
handled by the script-range rules and never reach the trigram stage).
Profiles keep the most frequent trigrams with their counts; the classifier
L2-normalizes them at load time.

Run from the repo root:  python3 scripts/train_trigram_profiles.py
"""

import json
import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gatewatch.langid import normalize_text, trigrams_of  # noqa: E402

PROFILE_SIZE = 600

SEED_CORPORA = {
    "eng": """
        Thank you for signing up with us today. Your account has been created
        and you can now log in with the password you chose. We will send you a
        message when your order has shipped and another one when it arrives.
        Please reply to this message if you did not request a new account.
        The meeting has been moved to next week because several people are
        away on holiday. Remember to bring the documents we talked about.
        Your package was delivered to the front desk this morning. If anything
        is missing or damaged, contact our support team and we will help you.
        We noticed a new sign in to your account from an unknown device. If
        this was not you, please change your password as soon as possible.
        Your appointment has been confirmed for tomorrow afternoon. You can
        cancel or reschedule at any time from the website or over the phone.
        The weather this weekend should be sunny with a light breeze, perfect
        for spending some time outside with friends and family in the park.
        Don't forget that the library books are due back on Friday. You can
        renew them online if you still need more time to finish reading.
    """,
    "ind": """
        Terima kasih telah mendaftar di layanan kami hari ini. Akun anda sudah
        berhasil dibuat dan sekarang anda bisa masuk dengan kata sandi yang
        anda pilih. Kami akan mengirim pesan ketika pesanan anda dikirim.
        Silakan balas pesan ini jika anda tidak meminta akun baru tersebut.
        Rapat sudah dipindahkan ke minggu depan karena beberapa orang sedang
        berlibur di luar kota. Jangan lupa membawa dokumen yang kita bahas.
        Paket anda sudah diantar ke meja depan tadi pagi. Jika ada barang yang
        hilang atau rusak, hubungi tim dukungan kami dan kami akan membantu.
        Kami melihat ada masuk baru ke akun anda dari perangkat yang tidak
        dikenal. Jika itu bukan anda, segera ganti kata sandi anda sekarang.
        Janji temu anda sudah dikonfirmasi untuk besok sore. Anda bisa
        membatalkan atau mengubah jadwal kapan saja lewat situs web kami.
        Cuaca akhir pekan ini diperkirakan cerah dengan angin sepoi, cocok
        untuk menghabiskan waktu di taman bersama teman dan keluarga anda.
        Jangan lupa buku perpustakaan harus dikembalikan hari jumat. Anda
        bisa memperpanjang pinjaman lewat internet jika masih perlu waktu.
    """,
    "fra": """
        Merci de vous être inscrit à notre service aujourd'hui. Votre compte a
        été créé et vous pouvez maintenant vous connecter avec le mot de passe
        choisi. Nous vous enverrons un message quand votre commande partira.
        Veuillez répondre à ce message si vous n'avez pas demandé ce compte.
        La réunion a été déplacée à la semaine prochaine parce que plusieurs
        personnes sont en vacances. Pensez à apporter les documents demandés.
        Votre colis a été livré à la réception ce matin. S'il manque quelque
        chose ou si un article est abîmé, contactez notre équipe d'assistance.
        Nous avons remarqué une nouvelle connexion à votre compte depuis un
        appareil inconnu. Si ce n'était pas vous, changez vite votre mot de
        passe pour protéger vos informations personnelles importantes.
        Votre rendez-vous est confirmé pour demain après-midi. Vous pouvez
        annuler ou reporter à tout moment depuis le site ou par téléphone.
        La météo de ce week-end devrait être ensoleillée avec une brise
        légère, parfaite pour passer du temps dehors avec la famille.
        N'oubliez pas que les livres de la bibliothèque doivent être rendus
        vendredi. Vous pouvez prolonger le prêt en ligne si nécessaire.
    """,
    "por": """
        Obrigado por se cadastrar no nosso serviço hoje. A sua conta foi
        criada e você já pode entrar com a senha que escolheu. Vamos enviar
        uma mensagem quando o seu pedido for despachado e outra na entrega.
        Por favor responda a esta mensagem se você não pediu uma conta nova.
        A reunião foi adiada para a próxima semana porque várias pessoas
        estão de férias fora da cidade. Lembre de trazer os documentos.
        O seu pacote foi entregue na portaria hoje de manhã. Se faltar algo
        ou houver dano, fale com a nossa equipe de suporte para ajudarmos.
        Percebemos um novo acesso à sua conta a partir de um aparelho
        desconhecido. Se não foi você, troque a sua senha o quanto antes.
        O seu horário está confirmado para amanhã à tarde. Você pode cancelar
        ou remarcar a qualquer momento pelo site ou pelo telefone.
        O tempo neste fim de semana deve ficar ensolarado com brisa leve,
        perfeito para passar um tempo fora com os amigos e a família.
        Não esqueça que os livros da biblioteca devem ser devolvidos na
        sexta. Dá para renovar o empréstimo pela internet se precisar.
    """,
    "spa": """
        Gracias por registrarte en nuestro servicio hoy. Tu cuenta ha sido
        creada y ya puedes iniciar sesión con la contraseña que elegiste.
        Te enviaremos un mensaje cuando tu pedido salga del almacén.
        Por favor responde a este mensaje si no solicitaste una cuenta nueva.
        La reunión se ha movido a la semana que viene porque varias personas
        están de vacaciones. Recuerda traer los documentos que comentamos.
        Tu paquete fue entregado en la recepción esta mañana. Si falta algo
        o hay daños, contacta con nuestro equipo de soporte y te ayudaremos.
        Hemos detectado un nuevo inicio de sesión en tu cuenta desde un
        dispositivo desconocido. Si no fuiste tú, cambia la contraseña ya.
        Tu cita queda confirmada para mañana por la tarde. Puedes cancelar
        o cambiar la fecha en cualquier momento desde la web o por teléfono.
        El tiempo este fin de semana será soleado con brisa suave, perfecto
        para pasar un rato fuera con los amigos y con toda la familia.
        No olvides que los libros de la biblioteca se devuelven el viernes.
        Puedes renovar el préstamo por internet si necesitas más tiempo.
    """,
    "deu": """
        Danke für Ihre Anmeldung bei unserem Dienst. Ihr Konto wurde erstellt
        und Sie können sich jetzt mit dem gewählten Passwort anmelden. Wir
        schicken Ihnen eine Nachricht, sobald Ihre Bestellung unterwegs ist.
        Bitte antworten Sie auf diese Nachricht, falls Sie kein neues Konto
        angefordert haben. Die Besprechung wurde auf nächste Woche verschoben,
        weil mehrere Leute im Urlaub sind. Denken Sie an die Unterlagen.
        Ihr Paket wurde heute Morgen an der Rezeption abgegeben. Falls etwas
        fehlt oder beschädigt ist, wenden Sie sich bitte an unser Team.
        Wir haben eine neue Anmeldung bei Ihrem Konto von einem unbekannten
        Gerät bemerkt. Wenn Sie das nicht waren, ändern Sie bitte sofort Ihr
        Passwort, um Ihre persönlichen Daten weiterhin zu schützen.
        Ihr Termin ist für morgen Nachmittag bestätigt. Sie können jederzeit
        über die Webseite oder telefonisch absagen oder verschieben.
    """,
    "ita": """
        Grazie per esserti registrato al nostro servizio oggi. Il tuo account
        è stato creato e ora puoi accedere con la password che hai scelto.
        Ti manderemo un messaggio quando il tuo ordine sarà spedito.
        Rispondi a questo messaggio se non hai richiesto un nuovo account.
        La riunione è stata spostata alla settimana prossima perché diverse
        persone sono in vacanza. Ricordati di portare i documenti richiesti.
        Il tuo pacco è stato consegnato alla reception questa mattina. Se
        manca qualcosa o ci sono danni, contatta il nostro supporto.
        Abbiamo notato un nuovo accesso al tuo account da un dispositivo
        sconosciuto. Se non eri tu, cambia subito la tua password.
        Il tuo appuntamento è confermato per domani pomeriggio. Puoi
        annullare o spostare la data in ogni momento dal sito o al telefono.
    """,
}


def build_profiles() -> dict[str, dict[str, float]]:
    import math

    raw: dict[str, Counter[str]] = {}
    for lang, corpus in SEED_CORPORA.items():
        counts: Counter[str] = Counter()
        for line in corpus.strip().splitlines():
            counts.update(trigrams_of(normalize_text(line)))
        raw[lang] = counts

    # Downweight trigrams shared across languages (IDF-style) so closely
    # related pairs like spa/por separate on their distinctive trigrams.
    df: Counter[str] = Counter()
    for counts in raw.values():
        df.update(counts.keys())
    n_langs = len(raw)
    profiles = {}
    for lang, counts in raw.items():
        weighted = {
            g: round(c * (math.log(n_langs / df[g]) + 0.1), 4)
            for g, c in counts.items()
        }
        top = sorted(weighted.items(), key=lambda kv: (-kv[1], kv[0]))[:PROFILE_SIZE]
        profiles[lang] = dict(top)
    return profiles


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "src/gatewatch/data/trigram_profiles.json"
    out.write_text(
        json.dumps(build_profiles(), ensure_ascii=False, indent=1, sort_keys=True),
        encoding="utf-8",
    )
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
